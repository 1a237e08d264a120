//! Random instance generators and brute-force oracles shared by the
//! integration and acceptance tests.
#![allow(dead_code)]

use pucs_core::assignment::ArmMode;
use pucs_core::matching::WeightMatrix;
use pucs_core::model::{expected_arm_reward, probed_arm_reward, RoundRealization};
use pucs_core::{DiscreteDistribution, Environment, ProbingCost, ResourcePmf};
use rand::Rng;

pub fn random_probs<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut probs: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // Put the rounding residue on the last entry so the sum is 1 to machine precision.
    let head: f64 = probs[..n - 1].iter().sum();
    probs[n - 1] = 1.0 - head;
    probs
}

pub fn random_distribution<R: Rng>(rng: &mut R, max_points: usize) -> DiscreteDistribution {
    let n = rng.gen_range(1..=max_points);
    let mut support: Vec<f64> = Vec::with_capacity(n);
    while support.len() < n {
        let x = (rng.gen_range(0.0..=1.0f64) * 100.0).round() / 100.0;
        if !support.contains(&x) {
            support.push(x);
        }
    }
    support.sort_by(f64::total_cmp);
    let probs = random_probs(rng, n);
    DiscreteDistribution::new(support, probs).unwrap()
}

pub fn random_pmf<R: Rng>(rng: &mut R, d_max: usize) -> ResourcePmf {
    ResourcePmf::new(random_probs(rng, d_max)).unwrap()
}

/// Nondecreasing schedule with `alpha[0] = 0` and `alpha[I] = 1`.
pub fn random_alpha<R: Rng>(rng: &mut R, budget: usize) -> ProbingCost {
    let mut inner: Vec<f64> = (1..budget).map(|_| rng.gen_range(0.0..1.0)).collect();
    inner.sort_by(f64::total_cmp);
    let mut alpha = vec![0.0];
    alpha.extend(inner);
    alpha.push(1.0);
    ProbingCost::new(alpha).unwrap()
}

#[derive(Debug, Clone, Copy)]
pub struct InstanceShape {
    pub max_arms: usize,
    pub max_plays: usize,
    pub max_d: usize,
    pub max_points: usize,
}

pub fn random_environment<R: Rng>(rng: &mut R, shape: InstanceShape) -> Environment {
    let arms = rng.gen_range(1..=shape.max_arms);
    let plays = rng.gen_range(1..=shape.max_plays);
    let d_max = rng.gen_range(1..=shape.max_d);
    let budget = rng.gen_range(1..=arms + 1);
    Environment::new(
        (0..arms).map(|_| random_pmf(rng, d_max)).collect(),
        (0..arms).map(|_| (0..plays).map(|_| random_distribution(rng, shape.max_points)).collect()).collect(),
        random_alpha(rng, budget),
    )
    .unwrap()
}

/// Joint outcome count of `(N, X)` for one arm over the full resource support.
pub fn full_outcomes(env: &Environment, arm: usize) -> u128 {
    let caps = {
        let mut caps: Vec<usize> = env
            .pmf(arm)
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| (i + 1).min(env.num_plays()))
            .collect();
        caps.dedup();
        caps.len() as u128
    };
    caps * env.rewards(arm).iter().map(|d| d.outcomes().count() as u128).product::<u128>()
}

/// Product of the `k` largest per-arm outcome counts.
pub fn top_product(env: &Environment, k: usize) -> u128 {
    let mut counts: Vec<u128> = (0..env.num_arms()).map(|m| full_outcomes(env, m)).collect();
    counts.sort_unstable_by(|a, b| b.cmp(a));
    counts.iter().take(k).product()
}

/// Maximum over all partial injective maps rows -> cols of the summed weights.
pub fn brute_matching(w: &WeightMatrix) -> f64 {
    fn go(w: &WeightMatrix, row: usize, used: &mut Vec<bool>) -> f64 {
        if row == w.rows() {
            return 0.0;
        }
        let mut best = go(w, row + 1, used);
        for c in 0..w.cols() {
            if !used[c] {
                used[c] = true;
                best = best.max(w.get(row, c) + go(w, row + 1, used));
                used[c] = false;
            }
        }
        best
    }
    go(w, 0, &mut vec![false; w.cols()])
}

/// Maximum over every map plays -> arms or unassigned.
pub fn brute_assignment(modes: &[ArmMode<'_>], plays: usize) -> f64 {
    let choices = modes.len() + 1;
    let total = choices.pow(plays as u32);
    let mut best = 0.0f64;
    for code in 0..total {
        let mut sets = vec![Vec::new(); modes.len()];
        let mut c = code;
        let mut feasible = true;
        for k in 0..plays {
            let a = c % choices;
            c /= choices;
            if a < modes.len() {
                if matches!(modes[a], ArmMode::Excluded) {
                    feasible = false;
                    break;
                }
                sets[a].push(k);
            }
        }
        if !feasible {
            continue;
        }
        let v: f64 = modes
            .iter()
            .zip(&sets)
            .map(|(mode, set)| match *mode {
                ArmMode::Probed { resources, rewards } => probed_arm_reward(set, rewards, resources),
                ArmMode::Unprobed { means, pmf } => expected_arm_reward(set, means, pmf),
                ArmMode::Excluded => 0.0,
            })
            .sum();
        best = best.max(v);
    }
    best
}

/// Expectation of `value` over every `(N_m, X_m)` of the arms in `set`,
/// enumerating the full resource support without merging.
pub fn brute_expectation(env: &Environment, set: &[usize], value: impl Fn(&RoundRealization) -> f64) -> f64 {
    let arms = env.num_arms();
    let plays = env.num_plays();
    let mut per_arm: Vec<Vec<(f64, usize, Vec<f64>)>> = Vec::new();
    for &m in set {
        let mut rows: Vec<(f64, usize, Vec<f64>)> = env
            .pmf(m)
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (p, i + 1, Vec::new()))
            .collect();
        for k in 0..plays {
            let mut next = Vec::new();
            for (p, n, xs) in &rows {
                for (x, q) in env.reward(m, k).outcomes() {
                    let mut v = xs.clone();
                    v.push(x);
                    next.push((p * q, *n, v));
                }
            }
            rows = next;
        }
        per_arm.push(rows);
    }
    let mut real = RoundRealization { resources: vec![1; arms], rewards: vec![vec![0.0; plays]; arms] };
    fn go(
        idx: usize,
        set: &[usize],
        per_arm: &[Vec<(f64, usize, Vec<f64>)>],
        real: &mut RoundRealization,
        prob: f64,
        value: &dyn Fn(&RoundRealization) -> f64,
    ) -> f64 {
        if idx == set.len() {
            return prob * value(real);
        }
        let m = set[idx];
        let mut total = 0.0;
        for (p, n, xs) in &per_arm[idx] {
            real.resources[m] = *n;
            real.rewards[m] = xs.clone();
            total += go(idx + 1, set, per_arm, real, prob * p, value);
        }
        total
    }
    go(0, set, &per_arm, &mut real, 1.0, &value)
}

/// Every subset of `0..n` as a sorted vector.
pub fn all_subsets(n: usize) -> Vec<Vec<usize>> {
    (0..1u32 << n).map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect()).collect()
}

pub fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut u: Vec<usize> = a.iter().chain(b).copied().collect();
    u.sort_unstable();
    u.dedup();
    u
}

pub fn intersection(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.contains(x)).collect()
}

pub fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.contains(x))
}

/// Raw per-arm data for a random mix of probed, unprobed and excluded arms.
pub struct ModeData {
    pub kinds: Vec<u8>,
    pub resources: Vec<usize>,
    pub rewards: Vec<Vec<f64>>,
    pub means: Vec<Vec<f64>>,
    pub pmfs: Vec<ResourcePmf>,
}

impl ModeData {
    pub fn random<R: Rng>(rng: &mut R, arms: usize, plays: usize, d_max: usize) -> Self {
        Self {
            kinds: (0..arms).map(|_| rng.gen_range(0..3)).collect(),
            resources: (0..arms).map(|_| rng.gen_range(1..=d_max)).collect(),
            rewards: (0..arms).map(|_| (0..plays).map(|_| rng.gen_range(0.0..1.0)).collect()).collect(),
            means: (0..arms).map(|_| (0..plays).map(|_| rng.gen_range(0.0..1.0)).collect()).collect(),
            pmfs: (0..arms).map(|_| random_pmf(rng, d_max)).collect(),
        }
    }

    pub fn modes(&self) -> Vec<ArmMode<'_>> {
        (0..self.kinds.len())
            .map(|m| match self.kinds[m] {
                0 => ArmMode::Probed { resources: self.resources[m], rewards: &self.rewards[m] },
                1 => ArmMode::Unprobed { means: &self.means[m], pmf: &self.pmfs[m] },
                _ => ArmMode::Excluded,
            })
            .collect()
    }
}

pub const EXACT_LIMIT: u128 = 100_000;

/// Instance for the approximation check: M <= 4, K <= 3, D_max <= 3, at most
/// three reward points, with every probing set the oracle scores enumerable.
pub fn approximation_instance<R: Rng>(rng: &mut R) -> Environment {
    let shape = InstanceShape { max_arms: 4, max_plays: 3, max_d: 3, max_points: 3 };
    loop {
        let env = random_environment(rng, shape);
        if top_product(&env, env.probing_cost().budget().saturating_sub(1)) <= EXACT_LIMIT {
            return env;
        }
    }
}

/// Instance for the structural properties, where every subset of arms is evaluated.
pub fn structure_instance<R: Rng>(rng: &mut R) -> Environment {
    let shape = InstanceShape { max_arms: 4, max_plays: 3, max_d: 3, max_points: 3 };
    loop {
        let env = random_environment(rng, shape);
        if top_product(&env, env.num_arms()) <= EXACT_LIMIT / 10 {
            return env;
        }
    }
}

/// `R(greedy) / R(S*)`, with the optimum found by a direct subset scan.
pub fn approximation_ratio(env: &Environment) -> (f64, f64, f64) {
    use pucs_core::offline::{greedy_probe_with, Evaluator, ExpectationMethod};
    let eval = Evaluator::new(env, ExpectationMethod::Exact).unwrap();
    let greedy = greedy_probe_with(&eval).unwrap().value;
    let budget = env.probing_cost().budget();
    let best = all_subsets(env.num_arms())
        .into_iter()
        .filter(|s| s.len() <= budget)
        .map(|s| eval.r_of(&s).unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    let ratio = if best > 0.0 { greedy / best } else { 1.0 };
    (ratio, greedy, best)
}

/// Decomposition, monotonicity and submodularity over every pair of subsets.
pub fn check_structure(env: &Environment) -> Result<(), String> {
    use pucs_core::offline::{Evaluator, ExpectationMethod};
    let eval = Evaluator::new(env, ExpectationMethod::Exact).unwrap();
    let sets = all_subsets(env.num_arms());
    let fp: Vec<f64> = sets.iter().map(|s| eval.f_prob(s).unwrap()).collect();
    let fu: Vec<f64> = sets.iter().map(|s| eval.f_unprobed(s)).collect();
    let index = |s: &[usize]| sets.iter().position(|x| x.as_slice() == s).unwrap();
    for (i, s) in sets.iter().enumerate() {
        let f = eval.f_total(s).unwrap();
        if f > fp[i] + fu[i] + 1e-9 {
            return Err(format!("decomposition fails at {s:?}: {f} > {} + {}", fp[i], fu[i]));
        }
        for (j, t) in sets.iter().enumerate() {
            if is_subset(s, t) {
                if fu[i] < fu[j] - 1e-9 {
                    return Err(format!("f_unprobed increases from {s:?} to {t:?}"));
                }
                if fp[i] > fp[j] + 1e-9 {
                    return Err(format!("f_prob decreases from {s:?} to {t:?}"));
                }
            }
            let (u, n) = (index(&union(s, t)), index(&intersection(s, t)));
            if fp[i] + fp[j] < fp[u] + fp[n] - 1e-9 {
                return Err(format!("submodularity fails for {s:?}, {t:?}"));
            }
        }
    }
    Ok(())
}

/// Fraction of Bernoulli(`mu`) streams where `mu - mu_hat_n >= eps_n` for some `n`,
/// with the estimates taken from `Estimators`.
pub fn coverage_violation_fraction(streams: usize, len: usize, mu: f64, delta: f64, seed: u64) -> f64 {
    use pucs_core::online::{confidence_radius, Estimators, Observation};
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let radii: Vec<f64> = (1..=len as u64).map(|n| confidence_radius(n, delta).unwrap()).collect();
    let mut violations = 0;
    for _ in 0..streams {
        let mut est = Estimators::new(1, 1, 1, delta).unwrap();
        let mut hit = false;
        for eps in &radii {
            let x = if rng.gen_bool(mu) { 1.0 } else { 0.0 };
            est.update(&[Observation { arm: 0, resources: None, rewards: vec![(0, x)] }]);
            if mu - est.mean(0, 0).unwrap() >= *eps {
                hit = true;
            }
        }
        violations += usize::from(hit);
    }
    violations as f64 / streams as f64
}

/// Fraction of trials where `max_d |p_hat_d - p_d| >= sqrt(2 ln(4 / delta) / t)`
/// after `t` resource observations, with `p_hat` taken from `Estimators`.
pub fn pmf_violation_fraction(trials: usize, t: usize, probs: &[f64], delta: f64, seed: u64) -> f64 {
    use pucs_core::online::{Estimators, Observation};
    use rand::distributions::{Distribution, WeightedIndex};
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let draw = WeightedIndex::new(probs).unwrap();
    let bound = (2.0 / t as f64 * (4.0 / delta).ln()).sqrt();
    let mut violations = 0;
    for _ in 0..trials {
        let mut est = Estimators::new(1, 1, probs.len(), delta).unwrap();
        let obs: Vec<Observation> = (0..t)
            .map(|_| Observation { arm: 0, resources: Some(draw.sample(&mut rng) + 1), rewards: Vec::new() })
            .collect();
        est.update(&obs);
        let p_hat = est.p_hat(0);
        let gap = p_hat.probs().iter().zip(probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        violations += usize::from(gap >= bound);
    }
    violations as f64 / trials as f64
}
