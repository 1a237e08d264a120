//! ζ-approximation regret and multi-seed experiment orchestration.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::Environment;
use crate::offline::{
    exhaustive_optimal_probe_with, Evaluator, ExpectationMethod, ProbePlan, DEFAULT_OUTCOME_LIMIT,
    EXHAUSTIVE_ARM_LIMIT,
};
use crate::online::{run_policy, Algorithm, PolicyConfig};

/// `(e - 1) / (2e - 1)`.
pub const ZETA: f64 = (std::f64::consts::E - 1.0) / (2.0 * std::f64::consts::E - 1.0);

pub const DEFAULT_CHECKPOINTS: [usize; 3] = [1000, 2000, 3000];

/// Seed of the shared draws used when scoring falls back to Monte Carlo.
pub const EVALUATION_SEED: u64 = 0x5eed_e7a1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretSeries {
    pub round: Vec<f64>,
    pub cumulative: Vec<f64>,
}

/// Per-round `zeta * optimal - score` and its running sum.
pub fn zeta_regret(scores: &[f64], optimal: f64, zeta: f64) -> RegretSeries {
    let round: Vec<f64> = scores.iter().map(|s| zeta * optimal - s).collect();
    let mut acc = 0.0;
    let cumulative = round
        .iter()
        .map(|r| {
            acc += r;
            acc
        })
        .collect();
    RegretSeries { round, cumulative }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub algo: Algorithm,
    pub seed: u64,
    pub scores: Vec<f64>,
    pub optimal: f64,
    pub regret: RegretSeries,
    pub fingerprint: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringMode {
    Exact,
    MonteCarlo { samples: usize },
}

impl ScoringMode {
    pub fn method(self) -> ExpectationMethod {
        match self {
            ScoringMode::Exact => ExpectationMethod::Exact,
            ScoringMode::MonteCarlo { samples } => ExpectationMethod::MonteCarlo { samples, seed: EVALUATION_SEED },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub env: Environment,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub policy: PolicyConfig,
    pub scoring: ScoringMode,
    pub checkpoints: Vec<usize>,
}

impl Experiment {
    pub fn new(env: Environment, horizon: usize, seeds: Vec<u64>, algorithms: Vec<Algorithm>) -> Self {
        Self {
            env,
            horizon,
            seeds,
            algorithms,
            policy: PolicyConfig::default(),
            scoring: ScoringMode::Exact,
            checkpoints: DEFAULT_CHECKPOINTS.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidExperiment("at least one seed is required".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidExperiment("at least one algorithm is required".into()));
        }
        if !(self.policy.delta > 0.0 && self.policy.delta < 1.0) {
            return Err(Error::InvalidDelta(self.policy.delta));
        }
        if self.policy.samples == 0 {
            return Err(Error::InvalidExperiment("sample count W must be at least 1".into()));
        }
        if let ScoringMode::MonteCarlo { samples: 0 } = self.scoring {
            return Err(Error::InvalidExperiment("Monte Carlo scoring needs at least one sample".into()));
        }
        let arms = self.env.num_arms();
        if arms > EXHAUSTIVE_ARM_LIMIT {
            return Err(Error::OracleInfeasible { arms, limit: EXHAUSTIVE_ARM_LIMIT });
        }
        if self.scoring == ScoringMode::Exact {
            let outcomes = largest_probe_support(&self.env);
            if outcomes > DEFAULT_OUTCOME_LIMIT {
                return Err(Error::SupportTooLarge { outcomes, limit: DEFAULT_OUTCOME_LIMIT });
            }
        }
        Ok(())
    }

    /// Hash of the environment and run parameters; seeds and algorithms excluded.
    pub fn fingerprint(&self) -> String {
        let doc = serde_json::json!({
            "env": self.env.to_json().unwrap_or_default(),
            "T": self.horizon,
            "policy": self.policy,
            "scoring": self.scoring,
        });
        let digest = Sha256::digest(doc.to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Joint outcome count of the largest probing set any run can score: the
/// `I - 1` arms with the most outcomes.
fn largest_probe_support(env: &Environment) -> u128 {
    let eval = Evaluator::new(env, ExpectationMethod::Exact).expect("exact evaluator");
    let mut per_arm: Vec<u128> = (0..env.num_arms()).map(|m| eval.joint_outcomes(&[m])).collect();
    per_arm.sort_unstable_by(|a, b| b.cmp(a));
    per_arm.iter().take(env.probing_cost().budget().saturating_sub(1)).product()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub optimal: ProbePlan,
    pub zeta: f64,
    pub traces: Vec<RegretTrace>,
    pub checkpoints: Vec<usize>,
}

/// Runs every `(algorithm, seed)` cell; traces are ordered by algorithm then seed.
pub fn run_experiment(exp: &Experiment) -> Result<ExperimentResult> {
    exp.validate()?;
    let scorer = Evaluator::new(&exp.env, exp.scoring.method())?;
    let optimal = exhaustive_optimal_probe_with(&scorer)?;
    log::info!("optimal probing set {:?} with R = {}", optimal.set, optimal.value);
    let fingerprint = exp.fingerprint();
    let cells: Vec<(Algorithm, u64)> =
        exp.algorithms.iter().flat_map(|&a| exp.seeds.iter().map(move |&s| (a, s))).collect();
    let traces = cells
        .par_iter()
        .map(|&(algo, seed)| {
            let logs = run_policy(&exp.env, algo, exp.horizon, exp.policy, seed, &scorer)?;
            let scores: Vec<f64> = logs.iter().map(|l| l.score).collect();
            log::debug!("{algo} seed {seed}: {} rounds", scores.len());
            Ok(RegretTrace {
                algo,
                seed,
                regret: zeta_regret(&scores, optimal.value, ZETA),
                scores,
                optimal: optimal.value,
                fingerprint: fingerprint.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult { optimal, zeta: ZETA, traces, checkpoints: exp.checkpoints.clone() })
}

pub const CSV_HEADER: [&str; 7] = ["t", "algo", "seed", "round_score", "optimal_score", "round_regret", "cum_regret"];

pub fn write_csv<W: Write>(result: &ExperimentResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for trace in &result.traces {
        for (i, score) in trace.scores.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                trace.algo.to_string(),
                trace.seed.to_string(),
                score.to_string(),
                trace.optimal.to_string(),
                trace.regret.round[i].to_string(),
                trace.regret.cumulative[i].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Mean cumulative regret over seeds at each checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub checkpoints: Vec<usize>,
    /// `None` where the checkpoint exceeds the horizon.
    pub rows: Vec<(Algorithm, Vec<Option<f64>>)>,
}

impl Summary {
    pub fn get(&self, algo: Algorithm, checkpoint: usize) -> Option<f64> {
        let col = self.checkpoints.iter().position(|&c| c == checkpoint)?;
        self.rows.iter().find(|(a, _)| *a == algo)?.1[col]
    }
}

pub fn summarize(result: &ExperimentResult) -> Summary {
    let mut algos: Vec<Algorithm> = Vec::new();
    for t in &result.traces {
        if !algos.contains(&t.algo) {
            algos.push(t.algo);
        }
    }
    let rows = algos
        .into_iter()
        .map(|algo| {
            let traces: Vec<&RegretTrace> = result.traces.iter().filter(|t| t.algo == algo).collect();
            let means = result
                .checkpoints
                .iter()
                .map(|&c| {
                    if c == 0 || traces.iter().any(|t| t.regret.cumulative.len() < c) {
                        return None;
                    }
                    Some(traces.iter().map(|t| t.regret.cumulative[c - 1]).sum::<f64>() / traces.len() as f64)
                })
                .collect();
            (algo, means)
        })
        .collect();
    Summary { checkpoints: result.checkpoints.clone(), rows }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<12}", "algo")?;
        for c in &self.checkpoints {
            write!(f, " {:>12}", format!("T={c}"))?;
        }
        writeln!(f)?;
        for (algo, means) in &self.rows {
            write!(f, "{:<12}", algo.name())?;
            for m in means {
                match m {
                    Some(v) => write!(f, " {v:>12.2}")?,
                    None => write!(f, " {:>12}", "-")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
