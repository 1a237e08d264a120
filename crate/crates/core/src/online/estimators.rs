use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DiscreteDistribution, Environment, ProbingCost, ResourcePmf};

pub const DEFAULT_DELTA: f64 = 0.05;

/// `sqrt((1 + n) ln(sqrt(n + 1) / delta) / (2 n^2))`, infinite for `n = 0`.
pub fn confidence_radius(n: u64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(radius(n, delta))
}

fn radius(n: u64, delta: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let n = n as f64;
    ((1.0 + n) * ((n + 1.0).sqrt() / delta).ln() / (2.0 * n * n)).sqrt()
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidDelta(delta))
    }
}

/// What one arm revealed in a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub arm: usize,
    pub resources: Option<usize>,
    /// `(play, reward)` pairs.
    pub rewards: Vec<(usize, f64)>,
}

/// Empirical resource pmfs, reward means and reward histograms.
#[derive(Debug, Clone)]
pub struct Estimators {
    plays: usize,
    d_max: usize,
    delta: f64,
    clamp_ucb: bool,
    resource_counts: Vec<Vec<u64>>,
    arm_obs: Vec<u64>,
    n: Vec<Vec<u64>>,
    mu_hat: Vec<Vec<f64>>,
    /// Sorted `(value, count)` pairs per `(arm, play)`.
    hist: Vec<Vec<Vec<(f64, u64)>>>,
}

impl Estimators {
    pub fn new(arms: usize, plays: usize, d_max: usize, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        if arms == 0 || plays == 0 || d_max == 0 {
            return Err(Error::InvalidEnvironment("estimators need M, K, D_max >= 1".into()));
        }
        Ok(Self {
            plays,
            d_max,
            delta,
            clamp_ucb: false,
            resource_counts: vec![vec![0; d_max]; arms],
            arm_obs: vec![0; arms],
            n: vec![vec![0; plays]; arms],
            mu_hat: vec![vec![0.0; plays]; arms],
            hist: vec![vec![Vec::new(); plays]; arms],
        })
    }

    pub fn for_environment(env: &Environment, delta: f64) -> Result<Self> {
        Self::new(env.num_arms(), env.num_plays(), env.d_max(), delta)
    }

    /// Caps optimistic means at 1. Off by default.
    pub fn with_clamped_ucb(mut self, clamp: bool) -> Self {
        self.clamp_ucb = clamp;
        self
    }

    pub fn num_arms(&self) -> usize {
        self.arm_obs.len()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn arm_observations(&self, arm: usize) -> u64 {
        self.arm_obs[arm]
    }

    pub fn is_observed(&self, arm: usize) -> bool {
        self.arm_obs[arm] > 0
    }

    /// Empirical resource pmf; uniform over `1..=D_max` before the first observation.
    pub fn p_hat(&self, arm: usize) -> ResourcePmf {
        let seen = self.arm_obs[arm];
        if seen == 0 {
            return ResourcePmf::uniform(self.d_max).expect("d_max >= 1");
        }
        let probs = self.resource_counts[arm].iter().map(|&c| c as f64 / seen as f64).collect();
        ResourcePmf::new(probs).expect("frequencies of observed counts")
    }

    pub fn count(&self, arm: usize, play: usize) -> u64 {
        self.n[arm][play]
    }

    pub fn mean(&self, arm: usize, play: usize) -> Option<f64> {
        (self.n[arm][play] > 0).then(|| self.mu_hat[arm][play])
    }

    /// Empirical reward distribution; a point mass at 1 before the first observation.
    pub fn f_hat(&self, arm: usize, play: usize) -> DiscreteDistribution {
        let total = self.n[arm][play];
        if total == 0 {
            return DiscreteDistribution::point_mass(1.0).expect("1 lies in [0, 1]");
        }
        let hist = &self.hist[arm][play];
        let support = hist.iter().map(|&(x, _)| x).collect();
        let probs = hist.iter().map(|&(_, c)| c as f64 / total as f64).collect();
        DiscreteDistribution::new(support, probs).expect("histogram of observed rewards")
    }

    pub fn radius(&self, arm: usize, play: usize) -> f64 {
        radius(self.n[arm][play], self.delta)
    }

    /// Finite stand-in for an infinite radius: above any per-round value.
    pub fn optimism_sentinel(&self) -> f64 {
        10.0 * self.plays as f64
    }

    /// `mu_hat + epsilon` per play, with the sentinel for unseen pairs.
    pub fn ucb_means(&self, arm: usize) -> Vec<f64> {
        (0..self.plays)
            .map(|k| {
                if self.n[arm][k] == 0 {
                    return self.optimism_sentinel();
                }
                let u = self.mu_hat[arm][k] + self.radius(arm, k);
                if self.clamp_ucb {
                    u.min(1.0)
                } else {
                    u
                }
            })
            .collect()
    }

    pub fn update(&mut self, observations: &[Observation]) {
        for obs in observations {
            let m = obs.arm;
            if let Some(d) = obs.resources {
                debug_assert!((1..=self.d_max).contains(&d));
                self.resource_counts[m][d - 1] += 1;
                self.arm_obs[m] += 1;
            }
            for &(k, x) in &obs.rewards {
                debug_assert!((0.0..=1.0).contains(&x));
                self.n[m][k] += 1;
                self.mu_hat[m][k] += (x - self.mu_hat[m][k]) / self.n[m][k] as f64;
                let hist = &mut self.hist[m][k];
                match hist.binary_search_by(|(v, _)| v.total_cmp(&x)) {
                    Ok(i) => hist[i].1 += 1,
                    Err(i) => hist.insert(i, (x, 1)),
                }
            }
        }
    }

    /// Plug-in environment built from `p_hat` and `F_hat`.
    pub fn model_environment(&self, probing_cost: ProbingCost) -> Environment {
        let arms = self.num_arms();
        let pmfs = (0..arms).map(|m| self.p_hat(m)).collect();
        let rewards = (0..arms).map(|m| (0..self.plays).map(|k| self.f_hat(m, k)).collect()).collect();
        Environment::new(pmfs, rewards, probing_cost).expect("estimates have consistent shapes")
    }
}
