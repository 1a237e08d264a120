//! Built-in synthetic environments.

use crate::error::{Error, Result};
use crate::model::{DiscreteDistribution, Environment, ProbingCost, ResourcePmf};

pub const PRESETS: [&str; 1] = ["setting-a"];

/// Three locations, two vehicles, up to five passengers, Bernoulli rewards,
/// probe budget two. One busy but uncertain location makes probing pay.
pub fn setting_a(alpha: Option<Vec<f64>>) -> Result<Environment> {
    let pmf = |p: &[f64]| ResourcePmf::new(p.to_vec());
    let row = |mus: &[f64]| mus.iter().map(|&mu| DiscreteDistribution::bernoulli(mu)).collect::<Result<Vec<_>>>();
    Environment::new(
        vec![
            pmf(&[0.8, 0.2, 0.0, 0.0, 0.0])?,
            pmf(&[0.2, 0.2, 0.2, 0.2, 0.2])?,
            pmf(&[0.5, 0.3, 0.1, 0.05, 0.05])?,
        ],
        vec![row(&[0.5, 0.5])?, row(&[0.2, 0.15])?, row(&[0.15, 0.1])?],
        ProbingCost::new(alpha.unwrap_or_else(|| vec![0.0, 0.1, 1.0]))?,
    )
}

pub fn preset(name: &str, alpha: Option<Vec<f64>>) -> Result<Environment> {
    match name {
        "setting-a" => setting_a(alpha),
        other => Err(Error::InvalidExperiment(format!("unknown preset `{other}`; known: {}", PRESETS.join(", ")))),
    }
}
