//! Optimal play-to-arm assignment for a fixed probing outcome.
//!
//! Each arm is expanded into resource slots and plays are matched to slots:
//! a probed arm with `N` units exposes `min(N, K)` slots that all pay the
//! realized reward `X[k]`; an unprobed arm exposes `K` slots where slot `i`
//! pays `mu[k] * P[D >= i]`. Because the survival curve is nonincreasing,
//! sorting each unprobed arm's plays by descending mean after matching keeps
//! the value and yields a profile whose closed-form reward equals it.

use crate::matching::{max_weight_matching, max_weight_value, WeightMatrix};
use crate::model::{
    expected_arm_reward, priority_order, probed_arm_reward, ActionProfile, Environment, ResourcePmf,
    RoundRealization,
};

/// How an arm participates in an assignment problem.
#[derive(Debug, Clone, Copy)]
pub enum ArmMode<'a> {
    Probed { resources: usize, rewards: &'a [f64] },
    Unprobed { means: &'a [f64], pmf: &'a ResourcePmf },
    Excluded,
}

impl ArmMode<'_> {
    /// Reward of `plays` on this arm under the mode's reward rule.
    pub fn value(&self, plays: &[usize]) -> f64 {
        match *self {
            ArmMode::Probed { resources, rewards } => probed_arm_reward(plays, rewards, resources),
            ArmMode::Unprobed { means, pmf } => expected_arm_reward(plays, means, pmf),
            ArmMode::Excluded => 0.0,
        }
    }

    fn slots(&self, plays: usize) -> usize {
        match *self {
            ArmMode::Probed { resources, .. } => resources.min(plays),
            ArmMode::Unprobed { .. } => plays,
            ArmMode::Excluded => 0,
        }
    }

    fn slot_weight(&self, play: usize, slot: usize) -> f64 {
        match *self {
            ArmMode::Probed { rewards, .. } => rewards[play],
            ArmMode::Unprobed { means, pmf } => means[play] * pmf.survival(slot + 1),
            ArmMode::Excluded => 0.0,
        }
    }
}

/// Plays x slots weight matrix and the arm owning each slot column.
fn slot_matrix(modes: &[ArmMode<'_>], plays: usize) -> (WeightMatrix, Vec<usize>) {
    let mut owners = Vec::new();
    let mut slot_index = Vec::new();
    for (m, mode) in modes.iter().enumerate() {
        for s in 0..mode.slots(plays) {
            owners.push(m);
            slot_index.push(s);
        }
    }
    let mut w = WeightMatrix::zeros(plays, owners.len());
    for k in 0..plays {
        for (c, (&m, &s)) in owners.iter().zip(&slot_index).enumerate() {
            w.set(k, c, modes[m].slot_weight(k, s));
        }
    }
    (w, owners)
}

/// Best profile over disjoint play sets and its value. Excluded arms get no plays.
pub fn optimal_assignment(modes: &[ArmMode<'_>], plays: usize) -> (ActionProfile, f64) {
    let (w, owners) = slot_matrix(modes, plays);
    let matching = max_weight_matching(&w);
    let mut sets = vec![Vec::new(); modes.len()];
    for &(k, c) in &matching.edges {
        sets[owners[c]].push(k);
    }
    for (m, set) in sets.iter_mut().enumerate() {
        *set = match modes[m] {
            ArmMode::Probed { rewards, .. } => priority_order(set, rewards),
            ArmMode::Unprobed { means, .. } => priority_order(set, means),
            ArmMode::Excluded => Vec::new(),
        };
    }
    let value: f64 = modes.iter().zip(&sets).map(|(mode, set)| mode.value(set)).sum();
    debug_assert!((value - matching.value).abs() <= 1e-9 * matching.value.abs().max(1.0));
    let profile = ActionProfile::new(sets, plays).expect("matching yields disjoint play sets");
    (profile, value)
}

/// Value of [`optimal_assignment`] without building the profile.
pub fn optimal_value(modes: &[ArmMode<'_>], plays: usize) -> f64 {
    let active: usize = modes.iter().map(|m| m.slots(plays)).sum();
    if active == 0 {
        return 0.0;
    }
    // A lone probed arm needs no matching: take its top rewards.
    let mut live = modes.iter().filter(|m| !matches!(m, ArmMode::Excluded));
    if let (Some(only), None) = (live.next(), live.next()) {
        let all: Vec<usize> = (0..plays).collect();
        return only.value(&all);
    }
    max_weight_value(&slot_matrix(modes, plays).0)
}

/// Modes for a probing outcome: arms in `probed` use the realization, the
/// rest are unprobed (when `env` is given) or excluded.
pub fn probe_modes<'a>(
    arms: usize,
    probed: &[usize],
    realization: &'a RoundRealization,
    unprobed: Option<&'a Environment>,
) -> Vec<ArmMode<'a>> {
    let mut modes: Vec<ArmMode<'a>> = match unprobed {
        Some(env) => (0..arms).map(|m| ArmMode::Unprobed { means: env.means(m), pmf: env.pmf(m) }).collect(),
        None => vec![ArmMode::Excluded; arms],
    };
    for &m in probed {
        modes[m] = ArmMode::Probed { resources: realization.resources[m], rewards: &realization.rewards[m] };
    }
    modes
}

/// Optimal value when plays may only use the probed arms.
pub fn h_prob(probed: &[usize], realization: &RoundRealization, plays: usize) -> f64 {
    if probed.is_empty() {
        return 0.0;
    }
    optimal_value(&probe_modes(realization.resources.len(), probed, realization, None), plays)
}

/// Optimal profile when probed arms use the realization and all other arms
/// their expected rewards.
pub fn h_total(probed: &[usize], realization: &RoundRealization, env: &Environment) -> (ActionProfile, f64) {
    optimal_assignment(&probe_modes(env.num_arms(), probed, realization, Some(env)), env.num_plays())
}

/// Value-only [`h_total`].
pub fn h_total_value(probed: &[usize], realization: &RoundRealization, env: &Environment) -> f64 {
    optimal_value(&probe_modes(env.num_arms(), probed, realization, Some(env)), env.num_plays())
}

/// Optimal expected value when plays may only use arms outside `excluded`.
pub fn f_unprobed(excluded: &[usize], env: &Environment) -> f64 {
    optimal_value(&unprobed_modes(excluded, env), env.num_plays())
}

/// Profile achieving [`f_unprobed`].
pub fn unprobed_assignment(excluded: &[usize], env: &Environment) -> (ActionProfile, f64) {
    optimal_assignment(&unprobed_modes(excluded, env), env.num_plays())
}

fn unprobed_modes<'a>(excluded: &[usize], env: &'a Environment) -> Vec<ArmMode<'a>> {
    let mut modes: Vec<ArmMode<'a>> =
        (0..env.num_arms()).map(|m| ArmMode::Unprobed { means: env.means(m), pmf: env.pmf(m) }).collect();
    for &m in excluded {
        modes[m] = ArmMode::Excluded;
    }
    modes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DiscreteDistribution, ProbingCost};

    #[test]
    fn all_excluded_is_empty() {
        let (p, v) = optimal_assignment(&[ArmMode::Excluded, ArmMode::Excluded], 3);
        assert_eq!(p.assigned_plays(), 0);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn single_unprobed_arm_takes_both_plays() {
        let pmf = ResourcePmf::new(vec![0.4, 0.6]).unwrap();
        let means = [0.8, 0.5];
        let (p, v) = optimal_assignment(&[ArmMode::Unprobed { means: &means, pmf: &pmf }], 2);
        assert_eq!(p.plays_of(0), &[0, 1]);
        assert!((v - 1.10).abs() < 1e-12);
    }

    #[test]
    fn unprobed_beats_weaker_probed() {
        let pmf = ResourcePmf::new(vec![1.0]).unwrap();
        let (x, mu) = ([0.6], [0.7]);
        let modes = [ArmMode::Probed { resources: 1, rewards: &x }, ArmMode::Unprobed { means: &mu, pmf: &pmf }];
        let (p, v) = optimal_assignment(&modes, 1);
        assert_eq!(p.arm_of(0), Some(1));
        assert!((v - 0.7).abs() < 1e-12);
    }

    #[test]
    fn slots_follow_descending_means() {
        // Slot discounts make the higher mean occupy the first slot.
        let pmf = ResourcePmf::new(vec![0.5, 0.5]).unwrap();
        let means = [0.2, 0.9];
        let (p, v) = optimal_assignment(&[ArmMode::Unprobed { means: &means, pmf: &pmf }], 2);
        assert_eq!(p.plays_of(0), &[1, 0]);
        assert!((v - (0.9 + 0.5 * 0.2)).abs() < 1e-12);
    }

    fn realization(resources: Vec<usize>, rewards: Vec<Vec<f64>>) -> RoundRealization {
        RoundRealization { resources, rewards }
    }

    #[test]
    fn h_prob_examples() {
        let r = realization(vec![1, 1], vec![vec![0.9, 0.2], vec![0.8, 0.3]]);
        assert_eq!(h_prob(&[], &r, 2), 0.0);
        assert!((h_prob(&[0, 1], &r, 2) - 1.2).abs() < 1e-12);
        let deep = realization(vec![5], vec![vec![0.1, 0.4, 0.3]]);
        assert!((h_prob(&[0], &deep, 3) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn h_total_mixes_modes() {
        let env = Environment::new(
            vec![ResourcePmf::new(vec![1.0]).unwrap(); 2],
            vec![vec![DiscreteDistribution::bernoulli(0.5).unwrap()], vec![DiscreteDistribution::point_mass(0.7).unwrap()]],
            ProbingCost::linear(2).unwrap(),
        )
        .unwrap();
        for x in [0.0, 1.0] {
            let r = realization(vec![1, 1], vec![vec![x], vec![0.7]]);
            let (_, v) = h_total(&[0], &r, &env);
            assert!((v - f64::max(x, 0.7)).abs() < 1e-12);
            assert!((h_total_value(&[0], &r, &env) - v).abs() < 1e-12);
        }
        let r = realization(vec![1, 1], vec![vec![1.0], vec![0.7]]);
        assert_eq!(h_total(&[], &r, &env), unprobed_assignment(&[], &env));
        assert!((h_total(&[0, 1], &r, &env).1 - h_prob(&[0, 1], &r, 1)).abs() < 1e-12);
        assert_eq!(f_unprobed(&[0, 1], &env), 0.0);
    }
}
