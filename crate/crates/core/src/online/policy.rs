use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::estimators::{Estimators, Observation, DEFAULT_DELTA};
use crate::assignment::{optimal_assignment, ArmMode};
use crate::error::{Error, Result};
use crate::model::{
    arm_mask, priority_order, sample_round, total_reward, ActionProfile, Environment, ResourcePmf, RoundRealization,
};
use crate::offline::{greedy_select, Evaluator, ExpectationMethod, DEFAULT_MC_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Greedy probing on estimates, then optimistic optimal assignment.
    Olpa,
    /// Never probes; optimistic optimal assignment.
    NonProbing,
    /// Random probing, random assignment.
    Rr,
    /// Greedy probing, random assignment.
    Gr,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Olpa, Algorithm::NonProbing, Algorithm::Rr, Algorithm::Gr];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Olpa => "olpa",
            Algorithm::NonProbing => "nonprobing",
            Algorithm::Rr => "rr",
            Algorithm::Gr => "gr",
        }
    }

    fn greedy_probing(self) -> bool {
        matches!(self, Algorithm::Olpa | Algorithm::Gr)
    }

    fn optimistic_assignment(self) -> bool {
        matches!(self, Algorithm::Olpa | Algorithm::NonProbing)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "olpa" => Ok(Algorithm::Olpa),
            "nonprobing" | "non-probing" => Ok(Algorithm::NonProbing),
            "rr" => Ok(Algorithm::Rr),
            "gr" => Ok(Algorithm::Gr),
            other => Err(Error::InvalidExperiment(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub delta: f64,
    /// Monte Carlo draws for greedy probing on the estimates.
    pub samples: usize,
    pub clamp_ucb: bool,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self { delta: DEFAULT_DELTA, samples: DEFAULT_MC_SAMPLES, clamp_ucb: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub t: usize,
    pub probe_set: Vec<usize>,
    pub profile: ActionProfile,
    pub realized_reward: f64,
    /// Expected reward of the round's decision rule under the true environment.
    pub score: f64,
    pub observations: Vec<Observation>,
}

/// Probing set chosen by greedy on the plug-in model of `est`.
pub fn choose_probe_set(est: &Estimators, env: &Environment, samples: usize, seed: u64) -> Result<Vec<usize>> {
    let model = est.model_environment(env.probing_cost().clone());
    let eval = Evaluator::new(&model, ExpectationMethod::MonteCarlo { samples, seed })?;
    Ok(greedy_select(&eval)?.selected)
}

/// Uniform probing-set size in `0..I`, then a uniform set of that size.
pub fn random_probe_set<R: Rng + ?Sized>(arms: usize, budget: usize, rng: &mut R) -> Vec<usize> {
    let size = rng.gen_range(0..budget).min(arms);
    let mut set = sample(rng, arms, size).into_vec();
    set.sort_unstable();
    set
}

/// Every play sent to an independently uniform arm.
pub fn random_profile<R: Rng + ?Sized>(arms: usize, plays: usize, rng: &mut R) -> ActionProfile {
    let mut sets = vec![Vec::new(); arms];
    for k in 0..plays {
        sets[rng.gen_range(0..arms)].push(k);
    }
    ActionProfile::new(sets, plays).expect("each play is assigned once")
}

/// One learner interacting with one environment; rounds are drawn from a
/// stream that depends only on the seed, so all algorithms face the same draws.
pub struct OnlineRun<'a> {
    env: &'a Environment,
    algorithm: Algorithm,
    config: PolicyConfig,
    est: Estimators,
    world: ChaCha8Rng,
    policy: ChaCha8Rng,
    t: usize,
}

impl<'a> OnlineRun<'a> {
    pub fn new(env: &'a Environment, algorithm: Algorithm, config: PolicyConfig, seed: u64) -> Result<Self> {
        if config.samples == 0 {
            return Err(Error::InvalidExperiment("sample count W must be at least 1".into()));
        }
        let est = Estimators::for_environment(env, config.delta)?.with_clamped_ucb(config.clamp_ucb);
        let world = ChaCha8Rng::seed_from_u64(seed);
        let mut policy = ChaCha8Rng::seed_from_u64(seed);
        policy.set_stream(1);
        Ok(Self { env, algorithm, config, est, world, policy, t: 0 })
    }

    pub fn estimators(&self) -> &Estimators {
        &self.est
    }

    /// Plays one round; `scorer` evaluates the decision on the true environment.
    pub fn step(&mut self, scorer: &Evaluator<'_>) -> Result<RoundLog> {
        let env = self.env;
        let (arms, plays) = (env.num_arms(), env.num_plays());
        let budget = env.probing_cost().budget();
        self.t += 1;
        let round = sample_round(env, &mut self.world);

        let probe_set = if self.algorithm.greedy_probing() {
            let seed = self.policy.gen();
            choose_probe_set(&self.est, env, self.config.samples, seed)?
        } else if self.algorithm == Algorithm::Rr {
            random_probe_set(arms, budget, &mut self.policy)
        } else {
            Vec::new()
        };
        debug_assert!(probe_set.len() < budget.max(1));

        let mut observations: Vec<Observation> = probe_set
            .iter()
            .map(|&m| Observation {
                arm: m,
                resources: Some(round.resources[m]),
                rewards: round.rewards[m].iter().copied().enumerate().collect(),
            })
            .collect();
        self.est.update(&observations);

        let (profile, score) = if self.algorithm.optimistic_assignment() {
            let optimism = Optimism::new(&self.est);
            let profile = optimism.assign(&probe_set, &round, plays);
            let score = expected_score(scorer, &probe_set, |r| optimism.assign(&probe_set, r, plays))?;
            (profile, score)
        } else {
            let profile = random_profile(arms, plays, &mut self.policy);
            let score = expected_score(scorer, &probe_set, |_| profile.clone())?;
            (profile, score)
        };

        let probed = arm_mask(arms, &probe_set);
        let mut served_total = 0.0;
        let mut feedback = Vec::new();
        for m in 0..arms {
            let set = profile.plays_of(m);
            if set.is_empty() {
                continue;
            }
            let n = round.resources[m];
            let priority = if probed[m] { &round.rewards[m][..] } else { env.means(m) };
            let served: Vec<usize> = priority_order(set, priority).into_iter().take(n.min(set.len())).collect();
            served_total += served.iter().map(|&k| round.rewards[m][k]).sum::<f64>();
            if !probed[m] {
                feedback.push(Observation {
                    arm: m,
                    resources: Some(n),
                    rewards: served.iter().map(|&k| (k, round.rewards[m][k])).collect(),
                });
            }
        }
        self.est.update(&feedback);
        observations.extend(feedback);

        Ok(RoundLog {
            t: self.t,
            realized_reward: env.probing_cost().retained(probe_set.len()) * served_total,
            probe_set,
            profile,
            score,
            observations,
        })
    }
}

/// Optimistic unprobed-arm parameters frozen after the probing phase.
struct Optimism {
    ucb: Vec<Vec<f64>>,
    pmfs: Vec<ResourcePmf>,
}

impl Optimism {
    fn new(est: &Estimators) -> Self {
        let arms = est.num_arms();
        Self { ucb: (0..arms).map(|m| est.ucb_means(m)).collect(), pmfs: (0..arms).map(|m| est.p_hat(m)).collect() }
    }

    fn assign(&self, probe_set: &[usize], round: &RoundRealization, plays: usize) -> ActionProfile {
        let mut modes: Vec<ArmMode<'_>> =
            self.ucb.iter().zip(&self.pmfs).map(|(means, pmf)| ArmMode::Unprobed { means, pmf }).collect();
        for &m in probe_set {
            modes[m] = ArmMode::Probed { resources: round.resources[m], rewards: &round.rewards[m] };
        }
        optimal_assignment(&modes, plays).0
    }
}

/// Expected total reward of probing `set` and then applying `assign` to the
/// probing outcome, under the scorer's environment.
pub fn expected_score(
    scorer: &Evaluator<'_>,
    set: &[usize],
    mut assign: impl FnMut(&RoundRealization) -> ActionProfile,
) -> Result<f64> {
    let env = scorer.env();
    if set.is_empty() {
        let blank = RoundRealization {
            resources: vec![1; env.num_arms()],
            rewards: vec![vec![0.0; env.num_plays()]; env.num_arms()],
        };
        return total_reward(env, set, &assign(&blank), &blank);
    }
    if set.len() > env.probing_cost().budget() {
        return Err(Error::ProbeBudgetExceeded { size: set.len(), budget: env.probing_cost().budget() });
    }
    scorer.expectation(set, |r| total_reward(env, set, &assign(r), r).expect("probe budget checked"))
}

/// Runs `algorithm` for `horizon` rounds.
pub fn run_policy(
    env: &Environment,
    algorithm: Algorithm,
    horizon: usize,
    config: PolicyConfig,
    seed: u64,
    scorer: &Evaluator<'_>,
) -> Result<Vec<RoundLog>> {
    let mut run = OnlineRun::new(env, algorithm, config, seed)?;
    (0..horizon).map(|_| run.step(scorer)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    NonProbing,
    Rr,
    Gr,
}

impl From<Baseline> for Algorithm {
    fn from(b: Baseline) -> Self {
        match b {
            Baseline::NonProbing => Algorithm::NonProbing,
            Baseline::Rr => Algorithm::Rr,
            Baseline::Gr => Algorithm::Gr,
        }
    }
}

pub fn run_baseline(
    policy: Baseline,
    env: &Environment,
    horizon: usize,
    config: PolicyConfig,
    seed: u64,
    scorer: &Evaluator<'_>,
) -> Result<Vec<RoundLog>> {
    run_policy(env, policy.into(), horizon, config, seed, scorer)
}

pub fn olpa_run(
    env: &Environment,
    horizon: usize,
    config: PolicyConfig,
    seed: u64,
    scorer: &Evaluator<'_>,
) -> Result<Vec<RoundLog>> {
    run_policy(env, Algorithm::Olpa, horizon, config, seed, scorer)
}
