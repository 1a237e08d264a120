//! Online learning: estimators, OLPA and the baseline policies.

mod estimators;
mod policy;

pub use estimators::{confidence_radius, Estimators, Observation, DEFAULT_DELTA};
pub use policy::{
    choose_probe_set, expected_score, olpa_run, random_probe_set, random_profile, run_baseline, run_policy,
    Algorithm, Baseline, OnlineRun, PolicyConfig, RoundLog,
};
