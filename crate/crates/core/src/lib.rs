//! Probing-augmented user-centric selection.
//!
//! Arms with random resource capacities serve plays (users); a round may
//! start by probing a few arms to reveal their capacity and rewards at a
//! multiplicative cost, after which plays are assigned to arms.

pub mod assignment;
pub mod error;
pub mod harness;
pub mod ingest;
pub mod matching;
pub mod model;
pub mod offline;
pub mod online;
pub mod presets;

pub use error::{Error, Result};
pub use model::{
    ActionProfile, DiscreteDistribution, Environment, ProbingCost, ResourcePmf, RoundRealization,
};
pub use offline::{exhaustive_optimal_probe, greedy_probe, Evaluator, ExpectationMethod, ProbePlan};
pub use online::Algorithm;
