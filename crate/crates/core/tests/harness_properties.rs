use proptest::prelude::*;

use sls_core::baselines::{backward_induction_br, Prior, UotPolicy};
use sls_core::fixtures;
use sls_core::harness::{
    entropy_bits, eval_average_case, eval_weighted_worst, eval_worst_case, kl_from_uniform,
    sample_dirichlet_prior, GameSpec,
};
use sls_core::search::{exact_expected_costs, GotPolicy, Policy};
use sls_core::VariantConfig;

#[test]
fn equilibrium_policy_equalizes_items_on_example1() {
    let fx = fixtures::example1();
    let report = eval_worst_case(&GotPolicy::new(fx.variant.clone()), &fx.oracle(), &fx.variant, 2000, 1)
        .unwrap();
    for s in &report.per_item {
        assert!((s.mean_length - 5.0 / 3.0).abs() < 0.05, "{s:?}");
    }
}

#[test]
fn weighted_cost_bounded_on_example3() {
    let fx = fixtures::example3();
    let report = eval_worst_case(&GotPolicy::new(fx.variant.clone()), &fx.oracle(), &fx.variant, 2000, 2)
        .unwrap();
    for s in &report.per_item {
        assert!(s.weighted_length <= 3.75 + 0.1, "{s:?}");
    }
    let direct = eval_weighted_worst(&GotPolicy::new(fx.variant.clone()), &fx.oracle(), &fx.variant, 2000, 2)
        .unwrap();
    assert_eq!(direct, report.weighted_worst);
}

fn small_game(seed: u64) -> sls_core::harness::Game {
    let variant = VariantConfig {
        m: 2,
        d: 2,
        cfr_iterations: 300,
        seed,
        ..VariantConfig::default()
    };
    GameSpec::RandomSplit { n: 7, r: 0.33, seed }
        .build(&variant, &[])
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn worst_dominates_average_and_br_is_a_lower_bound(
        seed in 0u64..1000,
        raw in prop::collection::vec(0.01f64..1.0, 7),
    ) {
        let game = small_game(seed);
        let total: f64 = raw.iter().sum();
        let prior = Prior::new(raw.iter().map(|x| x / total).collect()).unwrap();
        let got = GotPolicy::new(game.variant.clone());
        let uot = UotPolicy::new(2);
        for policy in [&got as &dyn Policy, &uot] {
            // Expected lengths, not sampled ones: the best response bounds expectations.
            let means = exact_expected_costs(policy, &game.oracle, &game.variant).unwrap();
            let report = eval_worst_case(policy, &game.oracle, &game.variant, 3, seed).unwrap();
            let l_worst = means.iter().copied().fold(0.0, f64::max);
            let avg = eval_average_case(&prior, &means).unwrap();
            prop_assert!(l_worst >= avg - 1e-12);
            let (_, br) = backward_induction_br(&game.oracle, prior.clone(), false).unwrap();
            prop_assert!(br.expected_cost <= avg + 1e-9);
            let uniform = eval_average_case(&Prior::uniform(7), &report.means()).unwrap();
            let mean = report.means().iter().sum::<f64>() / 7.0;
            prop_assert!((uniform - mean).abs() < 1e-12);
            prop_assert!(report.entropies.iter().all(|h| *h <= 1.0 + 1e-9));
        }
    }

    #[test]
    fn dirichlet_draws_are_priors(counts in prop::collection::vec(0.1f64..20.0, 1..12), k in 0.1f64..50.0, seed in 0u64..100) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let p = sample_dirichlet_prior(&counts, k, &mut rng).unwrap();
        prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(kl_from_uniform(&p) >= 0.0);
        prop_assert!(kl_from_uniform(&p) <= (counts.len() as f64).log2() + 1e-9);
    }

    #[test]
    fn entropy_is_bounded(raw in prop::collection::vec(0.0f64..1.0, 1..8)) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 0.0);
        let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let h = entropy_bits(&p);
        prop_assert!(h >= 0.0 && h <= (p.len() as f64).log2() + 1e-9);
    }
}
