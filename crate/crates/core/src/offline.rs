//! Offline probing with known distributions: the expectation-level
//! objectives, greedy probe selection, and the exhaustive optimum.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::{f_unprobed, h_prob, h_total_value};
use crate::error::{Error, Result};
use crate::model::{sample_round, Environment, RoundRealization};

/// Largest joint outcome space enumerated by [`ExpectationMethod::Exact`].
pub const DEFAULT_OUTCOME_LIMIT: u128 = 100_000;
/// Default Monte Carlo sample count `W`.
pub const DEFAULT_MC_SAMPLES: usize = 200;
/// Largest arm count accepted by [`exhaustive_optimal_probe`].
pub const EXHAUSTIVE_ARM_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExpectationMethod {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePlan {
    pub set: Vec<usize>,
    /// `R(set)` under the plan's expectation method.
    pub value: f64,
    pub method: ExpectationMethod,
}

enum Backend {
    Exact { limit: u128 },
    /// Common random numbers: every set is scored on the same draws.
    Sampled(Vec<RoundRealization>),
}

/// Evaluates `f_prob`, `f`, `f_unprobed` and `R` for one environment.
pub struct Evaluator<'a> {
    env: &'a Environment,
    method: ExpectationMethod,
    backend: Backend,
}

impl<'a> Evaluator<'a> {
    pub fn new(env: &'a Environment, method: ExpectationMethod) -> Result<Self> {
        let backend = match method {
            ExpectationMethod::Exact => Backend::Exact { limit: DEFAULT_OUTCOME_LIMIT },
            ExpectationMethod::MonteCarlo { samples, seed } => {
                if samples == 0 {
                    return Err(Error::InvalidExperiment("Monte Carlo needs at least one sample".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Backend::Sampled((0..samples).map(|_| sample_round(env, &mut rng)).collect())
            }
        };
        Ok(Self { env, method, backend })
    }

    /// Raises or lowers the exact-enumeration gate. No effect in Monte Carlo mode.
    pub fn with_outcome_limit(mut self, limit: u128) -> Self {
        if let Backend::Exact { limit: l } = &mut self.backend {
            *l = limit;
        }
        self
    }

    pub fn env(&self) -> &'a Environment {
        self.env
    }

    pub fn method(&self) -> ExpectationMethod {
        self.method
    }

    /// Size of the joint support of `(N_m, X_m)` over `set`, with resource
    /// counts above `K` merged.
    pub fn joint_outcomes(&self, set: &[usize]) -> u128 {
        set.iter().map(|&m| arm_outcome_count(self.env, m)).product()
    }

    /// Expectation of `value` over the probing realization of `set`. Entries
    /// of arms outside `set` in the realization passed to `value` are
    /// unspecified.
    pub fn expectation(&self, set: &[usize], mut value: impl FnMut(&RoundRealization) -> f64) -> Result<f64> {
        match &self.backend {
            Backend::Sampled(draws) => Ok(draws.iter().map(&mut value).sum::<f64>() / draws.len() as f64),
            Backend::Exact { limit } => {
                let outcomes = self.joint_outcomes(set);
                if outcomes > *limit {
                    return Err(Error::SupportTooLarge { outcomes, limit: *limit });
                }
                Ok(enumerate_outcomes(self.env, set, &mut value))
            }
        }
    }

    pub fn f_prob(&self, set: &[usize]) -> Result<f64> {
        if set.is_empty() {
            return Ok(0.0);
        }
        let plays = self.env.num_plays();
        self.expectation(set, |r| h_prob(set, r, plays))
    }

    /// `f(S)`: expected optimal total value with `set` probed.
    pub fn f_total(&self, set: &[usize]) -> Result<f64> {
        if set.is_empty() {
            return Ok(self.f_unprobed(set));
        }
        self.expectation(set, |r| h_total_value(set, r, self.env))
    }

    pub fn f_unprobed(&self, set: &[usize]) -> f64 {
        f_unprobed(set, self.env)
    }

    /// `R(S) = (1 - alpha(|S|)) f(S)`.
    pub fn r_of(&self, set: &[usize]) -> Result<f64> {
        let cost = self.env.probing_cost();
        if set.len() > cost.budget() {
            return Err(Error::ProbeBudgetExceeded { size: set.len(), budget: cost.budget() });
        }
        let retained = cost.retained(set.len());
        if retained == 0.0 {
            return Ok(0.0);
        }
        Ok(retained * self.f_total(set)?)
    }
}

fn arm_outcome_count(env: &Environment, arm: usize) -> u128 {
    let caps = resource_caps(env, arm).len() as u128;
    env.rewards(arm).iter().map(|d| d.outcomes().count() as u128).product::<u128>() * caps
}

/// `(min(N, K), probability)` with equal caps merged.
fn resource_caps(env: &Environment, arm: usize) -> Vec<(usize, f64)> {
    let plays = env.num_plays();
    let mut caps: Vec<(usize, f64)> = Vec::new();
    for (i, &p) in env.pmf(arm).probs().iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let cap = (i + 1).min(plays);
        match caps.last_mut() {
            Some(last) if last.0 == cap => last.1 += p,
            _ => caps.push((cap, p)),
        }
    }
    caps
}

struct ArmOutcome {
    prob: f64,
    resources: usize,
    rewards: Vec<f64>,
}

fn arm_outcomes(env: &Environment, arm: usize) -> Vec<ArmOutcome> {
    let mut reward_vectors: Vec<(f64, Vec<f64>)> = vec![(1.0, Vec::new())];
    for dist in env.rewards(arm) {
        let mut next = Vec::with_capacity(reward_vectors.len() * dist.support().len());
        for (p, xs) in &reward_vectors {
            for (x, q) in dist.outcomes() {
                let mut v = xs.clone();
                v.push(x);
                next.push((p * q, v));
            }
        }
        reward_vectors = next;
    }
    let mut out = Vec::new();
    for (cap, pc) in resource_caps(env, arm) {
        for (px, xs) in &reward_vectors {
            out.push(ArmOutcome { prob: pc * px, resources: cap, rewards: xs.clone() });
        }
    }
    out
}

fn enumerate_outcomes(env: &Environment, set: &[usize], value: &mut impl FnMut(&RoundRealization) -> f64) -> f64 {
    let arms = env.num_arms();
    let mut realization =
        RoundRealization { resources: vec![1; arms], rewards: vec![vec![0.0; env.num_plays()]; arms] };
    if set.is_empty() {
        return value(&realization);
    }
    let tables: Vec<Vec<ArmOutcome>> = set.iter().map(|&m| arm_outcomes(env, m)).collect();
    let mut digits = vec![0usize; set.len()];
    let mut total = 0.0;
    loop {
        let mut prob = 1.0;
        for (slot, &m) in set.iter().enumerate() {
            let o = &tables[slot][digits[slot]];
            prob *= o.prob;
            realization.resources[m] = o.resources;
            realization.rewards[m].copy_from_slice(&o.rewards);
        }
        total += prob * value(&realization);
        // Mixed-radix increment, last arm fastest.
        let mut pos = set.len();
        loop {
            if pos == 0 {
                return total;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < tables[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Sets visited by the greedy and the final choice.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyTrace {
    /// `S_0 ⊂ S_1 ⊂ …`, at most `I - 1` arms.
    pub chain: Vec<Vec<usize>>,
    pub f_prob: Vec<f64>,
    /// Index `j` maximizing `(1 - alpha(j)) f_prob(S_j)`.
    pub best_index: usize,
    /// `f_unprobed(∅)`.
    pub baseline: f64,
    pub selected: Vec<usize>,
}

impl GreedyTrace {
    pub fn best_score(&self, eval: &Evaluator<'_>) -> f64 {
        eval.env().probing_cost().retained(self.best_index) * self.f_prob[self.best_index]
    }
}

/// Greedy chain on marginal `f_prob` gains, then the best discounted set or
/// the empty set if that does not beat probing nothing.
pub fn greedy_select(eval: &Evaluator<'_>) -> Result<GreedyTrace> {
    let env = eval.env();
    let cost = env.probing_cost();
    let arms = env.num_arms();
    let mut chain = vec![Vec::new()];
    let mut values = vec![0.0];
    for i in 1..cost.budget() {
        let current = &chain[i - 1];
        if current.len() == arms {
            break;
        }
        let base = values[i - 1];
        let mut best: Option<(usize, f64, f64)> = None;
        for m in (0..arms).filter(|m| !current.contains(m)) {
            let mut candidate = current.clone();
            candidate.push(m);
            candidate.sort_unstable();
            let v = eval.f_prob(&candidate)?;
            let gain = v - base;
            if best.is_none_or(|(_, g, _)| gain > g) {
                best = Some((m, gain, v));
            }
        }
        let (m, _, v) = best.expect("an unprobed arm remains");
        let mut next = current.clone();
        next.push(m);
        next.sort_unstable();
        chain.push(next);
        values.push(v);
    }
    let mut best_index = 0;
    for i in 1..chain.len() {
        if cost.retained(i) * values[i] > cost.retained(best_index) * values[best_index] {
            best_index = i;
        }
    }
    let baseline = eval.f_unprobed(&[]);
    let selected =
        if cost.retained(best_index) * values[best_index] < baseline { Vec::new() } else { chain[best_index].clone() };
    Ok(GreedyTrace { chain, f_prob: values, best_index, baseline, selected })
}

/// Greedy probing set together with its `R` value.
pub fn greedy_probe(env: &Environment, method: ExpectationMethod) -> Result<ProbePlan> {
    greedy_probe_with(&Evaluator::new(env, method)?)
}

pub fn greedy_probe_with(eval: &Evaluator<'_>) -> Result<ProbePlan> {
    let trace = greedy_select(eval)?;
    let value = eval.r_of(&trace.selected)?;
    Ok(ProbePlan { set: trace.selected, value, method: eval.method() })
}

/// `argmax R(S)` over all `|S| <= I`; ties go to the smaller, then
/// lexicographically first, set.
pub fn exhaustive_optimal_probe(env: &Environment, method: ExpectationMethod) -> Result<ProbePlan> {
    exhaustive_optimal_probe_with(&Evaluator::new(env, method)?)
}

pub fn exhaustive_optimal_probe_with(eval: &Evaluator<'_>) -> Result<ProbePlan> {
    let env = eval.env();
    let arms = env.num_arms();
    if arms > EXHAUSTIVE_ARM_LIMIT {
        return Err(Error::OracleInfeasible { arms, limit: EXHAUSTIVE_ARM_LIMIT });
    }
    let mut best_set = Vec::new();
    let mut best = eval.r_of(&[])?;
    for size in 1..=env.probing_cost().budget().min(arms) {
        if env.probing_cost().retained(size) == 0.0 {
            break;
        }
        for set in Combinations::new(arms, size) {
            let v = eval.r_of(&set)?;
            if v > best {
                best = v;
                best_set = set;
            }
        }
    }
    Ok(ProbePlan { set: best_set, value: best, method: eval.method() })
}

/// `k`-subsets of `0..n` in lexicographic order.
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self { n, current: (k <= n).then(|| (0..k).collect()) }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}
