//! Ground-truth world model: arms holding random resource units, plays that
//! consume them, per-(arm, play) reward distributions and the probing overhead.
//!
//! All arm and play indices are zero-based. Resource counts are one-based
//! (`1..=d_max`) because an arm always holds at least one unit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PROB_TOL: f64 = 1e-9;

/// Finite discrete distribution on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    support: Vec<f64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    mean: f64,
}

impl DiscreteDistribution {
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if support.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "support has {} points but {} probabilities were given",
                support.len(),
                probs.len()
            )));
        }
        for (i, &x) in support.iter().enumerate() {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidDistribution(format!("support value {x} outside [0, 1]")));
            }
            if i > 0 && x <= support[i - 1] {
                return Err(Error::InvalidDistribution("support must be strictly ascending".into()));
            }
        }
        let probs = validated_probs(probs).map_err(Error::InvalidDistribution)?;
        let cumulative = running_sum(&probs);
        let mean = support.iter().zip(&probs).map(|(x, p)| x * p).sum();
        Ok(Self { support, probs, cumulative, mean })
    }

    pub fn point_mass(x: f64) -> Result<Self> {
        Self::new(vec![x], vec![1.0])
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidDistribution(format!("Bernoulli parameter {p} outside [0, 1]")));
        }
        Self::new(vec![0.0, 1.0], vec![1.0 - p, p])
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Support points carrying positive mass.
    pub fn outcomes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied()).filter(|&(_, p)| p > 0.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.support[sample_index(&self.cumulative, &self.probs, rng)]
    }

    pub fn contains(&self, x: f64) -> bool {
        self.support.contains(&x)
    }
}

/// Probability mass function of an arm's resource count over `{1, …, d_max}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourcePmf {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    survival: Vec<f64>,
}

impl ResourcePmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("resource pmf needs d_max >= 1".into()));
        }
        let probs = validated_probs(probs).map_err(Error::InvalidDistribution)?;
        let cumulative = running_sum(&probs);
        let mut survival = vec![0.0; probs.len()];
        let mut tail = 0.0;
        for d in (0..probs.len()).rev() {
            tail += probs[d];
            survival[d] = tail.min(1.0);
        }
        Ok(Self { probs, cumulative, survival })
    }

    pub fn uniform(d_max: usize) -> Result<Self> {
        if d_max == 0 {
            return Err(Error::InvalidDistribution("resource pmf needs d_max >= 1".into()));
        }
        Self::new(vec![1.0 / d_max as f64; d_max])
    }

    pub fn point_mass(d: usize, d_max: usize) -> Result<Self> {
        if d == 0 || d > d_max {
            return Err(Error::InvalidDistribution(format!("resource count {d} outside 1..={d_max}")));
        }
        let mut probs = vec![0.0; d_max];
        probs[d - 1] = 1.0;
        Self::new(probs)
    }

    pub fn d_max(&self) -> usize {
        self.probs.len()
    }

    /// `P[D = d]` for one-based `d`; zero outside the support.
    pub fn prob(&self, d: usize) -> f64 {
        if d == 0 {
            0.0
        } else {
            self.probs.get(d - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `P[D >= i]` for one-based `i`; one at `i <= 1`, zero beyond `d_max`.
    pub fn survival(&self, i: usize) -> f64 {
        if i <= 1 {
            1.0
        } else {
            self.survival.get(i - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.cumulative, &self.probs, rng) + 1
    }
}

/// Probing overhead schedule `alpha(0..=I)`: the fraction of the round's
/// reward lost when `i` arms are probed.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbingCost {
    alpha: Vec<f64>,
}

impl ProbingCost {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::InvalidEnvironment("alpha needs at least two entries (budget I >= 1)".into()));
        }
        if alpha[0] != 0.0 {
            return Err(Error::InvalidEnvironment("alpha(0) must be 0".into()));
        }
        if alpha[alpha.len() - 1] != 1.0 {
            return Err(Error::InvalidEnvironment("alpha(I) must be 1".into()));
        }
        for w in alpha.windows(2) {
            if w[1].partial_cmp(&w[0]).is_none_or(|o| o.is_lt()) {
                return Err(Error::InvalidEnvironment("alpha must be nondecreasing".into()));
            }
        }
        if alpha.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidEnvironment("alpha values must lie in [0, 1]".into()));
        }
        Ok(Self { alpha })
    }

    /// `alpha(i) = i / I`.
    pub fn linear(budget: usize) -> Result<Self> {
        if budget == 0 {
            return Err(Error::InvalidEnvironment("probe budget must be at least 1".into()));
        }
        Self::new((0..=budget).map(|i| i as f64 / budget as f64).collect())
    }

    /// Probe budget `I`.
    pub fn budget(&self) -> usize {
        self.alpha.len() - 1
    }

    pub fn alpha(&self, probed: usize) -> f64 {
        self.alpha.get(probed).copied().unwrap_or(1.0)
    }

    /// Multiplier `1 - alpha(i)` applied to the round's reward.
    pub fn retained(&self, probed: usize) -> f64 {
        1.0 - self.alpha(probed)
    }

    pub fn schedule(&self) -> &[f64] {
        &self.alpha
    }
}

/// The stationary environment. Validated on construction; everything
/// downstream assumes the invariants hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnvironmentDoc", into = "EnvironmentDoc")]
pub struct Environment {
    plays: usize,
    d_max: usize,
    resource_pmfs: Vec<ResourcePmf>,
    reward_dists: Vec<Vec<DiscreteDistribution>>,
    means: Vec<Vec<f64>>,
    probing_cost: ProbingCost,
}

impl Environment {
    pub fn new(
        resource_pmfs: Vec<ResourcePmf>,
        reward_dists: Vec<Vec<DiscreteDistribution>>,
        probing_cost: ProbingCost,
    ) -> Result<Self> {
        let arms = resource_pmfs.len();
        if arms == 0 {
            return Err(Error::InvalidEnvironment("at least one arm is required".into()));
        }
        if reward_dists.len() != arms {
            return Err(Error::InvalidEnvironment(format!(
                "{} resource pmfs but {} reward rows",
                arms,
                reward_dists.len()
            )));
        }
        let plays = reward_dists[0].len();
        if plays == 0 {
            return Err(Error::InvalidEnvironment("at least one play is required".into()));
        }
        if let Some(m) = reward_dists.iter().position(|row| row.len() != plays) {
            return Err(Error::InvalidEnvironment(format!("reward row {m} does not have {plays} plays")));
        }
        let d_max = resource_pmfs[0].d_max();
        if let Some(m) = resource_pmfs.iter().position(|p| p.d_max() != d_max) {
            return Err(Error::InvalidEnvironment(format!("resource pmf {m} does not have d_max = {d_max}")));
        }
        let means = reward_dists.iter().map(|row| row.iter().map(DiscreteDistribution::mean).collect()).collect();
        Ok(Self { plays, d_max, resource_pmfs, reward_dists, means, probing_cost })
    }

    pub fn num_arms(&self) -> usize {
        self.resource_pmfs.len()
    }

    pub fn num_plays(&self) -> usize {
        self.plays
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    pub fn pmf(&self, arm: usize) -> &ResourcePmf {
        &self.resource_pmfs[arm]
    }

    pub fn reward(&self, arm: usize, play: usize) -> &DiscreteDistribution {
        &self.reward_dists[arm][play]
    }

    pub fn rewards(&self, arm: usize) -> &[DiscreteDistribution] {
        &self.reward_dists[arm]
    }

    /// Mean rewards `mu[arm][..]`.
    pub fn means(&self, arm: usize) -> &[f64] {
        &self.means[arm]
    }

    pub fn probing_cost(&self) -> &ProbingCost {
        &self.probing_cost
    }

    pub fn with_probing_cost(mut self, probing_cost: ProbingCost) -> Self {
        self.probing_cost = probing_cost;
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// On-disk layout of an [`Environment`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct EnvironmentDoc {
    #[serde(rename = "M")]
    arms: usize,
    #[serde(rename = "K")]
    plays: usize,
    #[serde(rename = "D_max")]
    d_max: usize,
    resource_pmfs: Vec<Vec<f64>>,
    reward_supports: Vec<Vec<Vec<f64>>>,
    reward_probs: Vec<Vec<Vec<f64>>>,
    alpha: Vec<f64>,
}

impl TryFrom<EnvironmentDoc> for Environment {
    type Error = Error;

    fn try_from(doc: EnvironmentDoc) -> Result<Self> {
        if doc.resource_pmfs.len() != doc.arms
            || doc.reward_supports.len() != doc.arms
            || doc.reward_probs.len() != doc.arms
        {
            return Err(Error::InvalidEnvironment(format!("expected {} arm entries", doc.arms)));
        }
        let pmfs = doc
            .resource_pmfs
            .into_iter()
            .map(|p| {
                if p.len() != doc.d_max {
                    return Err(Error::InvalidEnvironment(format!("resource pmf must have D_max = {} entries", doc.d_max)));
                }
                ResourcePmf::new(p)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rewards = Vec::with_capacity(doc.arms);
        for (supports, probs) in doc.reward_supports.into_iter().zip(doc.reward_probs) {
            if supports.len() != doc.plays || probs.len() != doc.plays {
                return Err(Error::InvalidEnvironment(format!("expected K = {} reward distributions per arm", doc.plays)));
            }
            let row = supports
                .into_iter()
                .zip(probs)
                .map(|(s, p)| DiscreteDistribution::new(s, p))
                .collect::<Result<Vec<_>>>()?;
            rewards.push(row);
        }
        Environment::new(pmfs, rewards, ProbingCost::new(doc.alpha)?)
    }
}

impl From<Environment> for EnvironmentDoc {
    fn from(env: Environment) -> Self {
        EnvironmentDoc {
            arms: env.num_arms(),
            plays: env.plays,
            d_max: env.d_max,
            resource_pmfs: env.resource_pmfs.iter().map(|p| p.probs.clone()).collect(),
            reward_supports: env
                .reward_dists
                .iter()
                .map(|row| row.iter().map(|d| d.support.clone()).collect())
                .collect(),
            reward_probs: env
                .reward_dists
                .iter()
                .map(|row| row.iter().map(|d| d.probs.clone()).collect())
                .collect(),
            alpha: env.probing_cost.alpha,
        }
    }
}

/// One round's draw of resource counts `N` and rewards `X` for every arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRealization {
    pub resources: Vec<usize>,
    pub rewards: Vec<Vec<f64>>,
}

/// Draws `N[m] ~ pmf_m` then `X[m][k] ~ F_{m,k}` for each arm in index order.
pub fn sample_round<R: Rng + ?Sized>(env: &Environment, rng: &mut R) -> RoundRealization {
    let mut resources = Vec::with_capacity(env.num_arms());
    let mut rewards = Vec::with_capacity(env.num_arms());
    for m in 0..env.num_arms() {
        resources.push(env.pmf(m).sample(rng));
        rewards.push(env.rewards(m).iter().map(|d| d.sample(rng)).collect());
    }
    RoundRealization { resources, rewards }
}

/// Disjoint play sets, one per arm. Plays inside an arm are kept in service
/// priority order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionProfile {
    sets: Vec<Vec<usize>>,
}

impl ActionProfile {
    pub fn empty(arms: usize) -> Self {
        Self { sets: vec![Vec::new(); arms] }
    }

    pub fn new(sets: Vec<Vec<usize>>, plays: usize) -> Result<Self> {
        let mut seen = vec![false; plays];
        for (m, set) in sets.iter().enumerate() {
            for &k in set {
                if k >= plays {
                    return Err(Error::InvalidProfile(format!("arm {m} references play {k}, only {plays} plays exist")));
                }
                if seen[k] {
                    return Err(Error::InvalidProfile(format!("play {k} assigned more than once")));
                }
                seen[k] = true;
            }
        }
        Ok(Self { sets })
    }

    pub fn num_arms(&self) -> usize {
        self.sets.len()
    }

    pub fn plays_of(&self, arm: usize) -> &[usize] {
        &self.sets[arm]
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn arm_of(&self, play: usize) -> Option<usize> {
        self.sets.iter().position(|s| s.contains(&play))
    }

    pub fn assigned_plays(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    pub fn is_disjoint(&self) -> bool {
        let mut all: Vec<usize> = self.sets.iter().flatten().copied().collect();
        let n = all.len();
        all.sort_unstable();
        all.dedup();
        all.len() == n
    }
}

/// Plays of `plays` ordered by descending `values[k]`, lower index first on ties.
pub fn priority_order(plays: &[usize], values: &[f64]) -> Vec<usize> {
    let mut order = plays.to_vec();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Reward of a probed arm: the `min(N, |C|)` largest realized rewards among its plays.
pub fn probed_arm_reward(plays: &[usize], rewards: &[f64], resources: usize) -> f64 {
    let served = resources.min(plays.len());
    if served == plays.len() {
        return plays.iter().map(|&k| rewards[k]).sum();
    }
    priority_order(plays, rewards).iter().take(served).map(|&k| rewards[k]).sum()
}

/// Expected reward of an unprobed arm: `sum_i mu_sorted[i] * P[D >= i]`.
pub fn expected_arm_reward(plays: &[usize], means: &[f64], pmf: &ResourcePmf) -> f64 {
    priority_order(plays, means)
        .iter()
        .enumerate()
        .map(|(i, &k)| means[k] * pmf.survival(i + 1))
        .sum()
}

/// `(1 - alpha(|S|))` times the probed rewards plus the unprobed expected rewards.
pub fn total_reward(
    env: &Environment,
    probed: &[usize],
    profile: &ActionProfile,
    realization: &RoundRealization,
) -> Result<f64> {
    let budget = env.probing_cost().budget();
    if probed.len() > budget {
        return Err(Error::ProbeBudgetExceeded { size: probed.len(), budget });
    }
    let mask = arm_mask(env.num_arms(), probed);
    let sum: f64 = (0..env.num_arms())
        .map(|m| {
            let plays = profile.plays_of(m);
            if mask[m] {
                probed_arm_reward(plays, &realization.rewards[m], realization.resources[m])
            } else {
                expected_arm_reward(plays, env.means(m), env.pmf(m))
            }
        })
        .sum();
    Ok(env.probing_cost().retained(probed.len()) * sum)
}

pub(crate) fn arm_mask(arms: usize, set: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; arms];
    for &m in set {
        mask[m] = true;
    }
    mask
}

fn validated_probs(probs: Vec<f64>) -> std::result::Result<Vec<f64>, String> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err("probabilities must be finite and nonnegative".into());
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(format!("probabilities sum to {total}, expected 1"));
    }
    Ok(probs)
}

fn running_sum(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

fn sample_index<R: Rng + ?Sized>(cumulative: &[f64], probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    match cumulative.iter().position(|&c| c > u) {
        Some(i) => i,
        None => probs.iter().rposition(|&p| p > 0.0).unwrap_or(0),
    }
}
