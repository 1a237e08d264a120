mod common;

use pucs_core::offline::{exhaustive_optimal_probe, Evaluator, ExpectationMethod};
use pucs_core::online::{run_policy, Algorithm, PolicyConfig};
use pucs_core::presets::setting_a;
use pucs_core::{DiscreteDistribution, Environment, ProbingCost, ResourcePmf};

fn point_mass_env() -> Environment {
    let row = |xs: &[f64]| xs.iter().map(|&x| DiscreteDistribution::point_mass(x).unwrap()).collect::<Vec<_>>();
    Environment::new(
        vec![
            ResourcePmf::point_mass(2, 2).unwrap(),
            ResourcePmf::point_mass(1, 2).unwrap(),
            ResourcePmf::point_mass(1, 2).unwrap(),
        ],
        vec![row(&[0.6, 0.5]), row(&[0.9, 0.2]), row(&[0.3, 0.3])],
        ProbingCost::new(vec![0.0, 0.1, 1.0]).unwrap(),
    )
    .unwrap()
}

#[test]
fn runs_are_reproducible() {
    let env = setting_a(None).unwrap();
    let scorer = Evaluator::new(&env, ExpectationMethod::Exact).unwrap();
    for algo in Algorithm::ALL {
        let a = run_policy(&env, algo, 60, PolicyConfig::default(), 5, &scorer).unwrap();
        let b = run_policy(&env, algo, 60, PolicyConfig::default(), 5, &scorer).unwrap();
        assert_eq!(a, b, "{algo}");
        let c = run_policy(&env, algo, 60, PolicyConfig::default(), 6, &scorer).unwrap();
        assert_ne!(a, c, "{algo}");
    }
}

#[test]
fn per_round_invariants() {
    let env = setting_a(None).unwrap();
    let scorer = Evaluator::new(&env, ExpectationMethod::Exact).unwrap();
    let optimum = exhaustive_optimal_probe(&env, ExpectationMethod::Exact).unwrap().value;
    let budget = env.probing_cost().budget();
    for algo in Algorithm::ALL {
        let logs = run_policy(&env, algo, 300, PolicyConfig::default(), 1, &scorer).unwrap();
        for (t, log) in logs.iter().enumerate() {
            assert_eq!(log.t, t + 1);
            assert!(log.probe_set.len() < budget, "{algo} round {}: {:?}", log.t, log.probe_set);
            assert!(log.probe_set.windows(2).all(|w| w[0] < w[1]));
            assert!(log.profile.is_disjoint());
            assert!(log.profile.assigned_plays() <= env.num_plays());
            assert!(log.score >= -1e-12 && log.score <= optimum + 1e-9, "{algo} round {}: {}", log.t, log.score);
            assert!(log.realized_reward >= 0.0);
            if algo == Algorithm::NonProbing {
                assert!(log.probe_set.is_empty());
            }
            for obs in &log.observations {
                match obs.resources {
                    Some(d) => assert!((1..=env.d_max()).contains(&d)),
                    None => panic!("every observation carries the resource count"),
                }
            }
        }
    }
}

#[test]
fn olpa_settles_on_the_optimum() {
    let env = point_mass_env();
    let scorer = Evaluator::new(&env, ExpectationMethod::Exact).unwrap();
    let optimum = exhaustive_optimal_probe(&env, ExpectationMethod::Exact).unwrap();
    assert!(optimum.set.is_empty());
    assert!((optimum.value - 1.4).abs() < 1e-12);
    let horizon = 2000;
    let logs = run_policy(&env, Algorithm::Olpa, horizon, PolicyConfig::default(), 3, &scorer).unwrap();
    let tail = &logs[horizon * 9 / 10..];
    let hits = tail.iter().filter(|l| (l.score - optimum.value).abs() < 1e-9).count();
    assert!(hits as f64 >= 0.95 * tail.len() as f64, "{hits} of {}", tail.len());
}

#[test]
fn non_probing_finds_the_best_arm() {
    let env = Environment::new(
        vec![ResourcePmf::point_mass(1, 1).unwrap(); 3],
        vec![
            vec![DiscreteDistribution::point_mass(0.9).unwrap()],
            vec![DiscreteDistribution::bernoulli(0.5).unwrap()],
            vec![DiscreteDistribution::bernoulli(0.3).unwrap()],
        ],
        ProbingCost::new(vec![0.0, 1.0]).unwrap(),
    )
    .unwrap();
    let scorer = Evaluator::new(&env, ExpectationMethod::Exact).unwrap();
    let horizon = 5000;
    let logs = run_policy(&env, Algorithm::NonProbing, horizon, PolicyConfig::default(), 8, &scorer).unwrap();
    let tail = &logs[horizon * 9 / 10..];
    let best = tail.iter().filter(|l| l.profile.arm_of(0) == Some(0)).count();
    assert!(best as f64 > 0.95 * tail.len() as f64, "{best} of {}", tail.len());
}

#[test]
fn greedy_probing_shared_by_olpa_and_gr() {
    // Both probe with greedy on their estimates; GR then assigns at random.
    let env = setting_a(None).unwrap();
    let scorer = Evaluator::new(&env, ExpectationMethod::Exact).unwrap();
    for algo in [Algorithm::Olpa, Algorithm::Gr] {
        let logs = run_policy(&env, algo, 50, PolicyConfig::default(), 2, &scorer).unwrap();
        assert!(logs.iter().any(|l| !l.probe_set.is_empty()), "{algo}");
    }
}
