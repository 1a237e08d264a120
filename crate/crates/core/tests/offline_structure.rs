mod common;

use common::*;
use pucs_core::offline::{
    exhaustive_optimal_probe, greedy_probe, greedy_select, Evaluator, ExpectationMethod,
};
use pucs_core::{DiscreteDistribution, Environment, ProbingCost, ResourcePmf};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ZETA: f64 = 0.387_300_163_219_717_94;

fn worked_instance(alpha: Vec<f64>) -> Environment {
    Environment::new(
        vec![ResourcePmf::new(vec![1.0]).unwrap(); 2],
        vec![
            vec![DiscreteDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap()],
            vec![DiscreteDistribution::point_mass(0.4).unwrap()],
        ],
        ProbingCost::new(alpha).unwrap(),
    )
    .unwrap()
}

#[test]
fn worked_instance_quantities() {
    let env = worked_instance(vec![0.0, 0.1, 1.0]);
    let eval = Evaluator::new(&env, ExpectationMethod::Exact).unwrap();
    // Two outcomes of arm 0, enumerated by hand.
    let by_hand_total = 0.5 * f64::max(0.0, 0.4) + 0.5 * f64::max(1.0, 0.4);
    assert!((eval.f_total(&[0]).unwrap() - by_hand_total).abs() < 1e-12);
    assert!((eval.f_prob(&[0]).unwrap() - 0.5).abs() < 1e-12);
    assert!((eval.f_prob(&[1]).unwrap() - 0.4).abs() < 1e-12);
    assert!((eval.r_of(&[0]).unwrap() - 0.9 * by_hand_total).abs() < 1e-12);
    let greedy = greedy_probe(&env, ExpectationMethod::Exact).unwrap();
    let best = exhaustive_optimal_probe(&env, ExpectationMethod::Exact).unwrap();
    assert!(greedy.set.is_empty());
    assert_eq!(best.set, vec![0]);
    let ratio = greedy.value / best.value;
    assert!((ratio - 0.5 / 0.63).abs() < 1e-12);
    assert!(ratio >= ZETA);
}

#[test]
fn free_probing_nonempty_and_dominates_empty() {
    // alpha(i) = 0 below the budget: greedy probes and beats probing nothing.
    let env = worked_instance(vec![0.0, 0.0, 1.0]);
    let plan = greedy_probe(&env, ExpectationMethod::Exact).unwrap();
    assert!(!plan.set.is_empty());
    let eval = Evaluator::new(&env, ExpectationMethod::Exact).unwrap();
    assert!(plan.value >= eval.f_unprobed(&[]) - 1e-12);
}

#[test]
fn greedy_never_loses_to_empty_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..60 {
        let env = approximation_instance(&mut rng);
        let eval = Evaluator::new(&env, ExpectationMethod::Exact).unwrap();
        let trace = greedy_select(&eval).unwrap();
        assert!(trace.chain.windows(2).all(|w| is_subset(&w[0], &w[1]) && w[1].len() == w[0].len() + 1));
        assert!(trace.chain.len() <= env.probing_cost().budget().max(1));
        assert!(trace.selected.len() < env.probing_cost().budget().max(1));
        let r = eval.r_of(&trace.selected).unwrap();
        assert!(r >= eval.f_unprobed(&[]) - 1e-9);
    }
}

#[test]
fn approximation_guarantee_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..60 {
        let env = approximation_instance(&mut rng);
        let (ratio, greedy, best) = approximation_ratio(&env);
        assert!(ratio >= ZETA - 1e-9, "instance {i}: {greedy} / {best} = {ratio}");
        let oracle = exhaustive_optimal_probe(&env, ExpectationMethod::Exact).unwrap();
        assert!((oracle.value - best).abs() < 1e-12);
    }
}

#[test]
fn structural_properties_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..30 {
        let env = structure_instance(&mut rng);
        check_structure(&env).unwrap();
    }
}

#[test]
fn exhaustive_prefers_smaller_sets_on_ties() {
    // Identical arms with point-mass rewards: probing adds nothing but tie-breaks matter.
    let env = Environment::new(
        vec![ResourcePmf::new(vec![1.0]).unwrap(); 3],
        vec![vec![DiscreteDistribution::point_mass(0.5).unwrap()]; 3],
        ProbingCost::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap(),
    )
    .unwrap();
    let best = exhaustive_optimal_probe(&env, ExpectationMethod::Exact).unwrap();
    assert!(best.set.is_empty());
    assert!((best.value - 0.5).abs() < 1e-12);
}
