use mrw_bandit::analysis::{binomial_se, clipping_free_rate};
use mrw_bandit::{generate, AdversaryConfig, Variant};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn losses_in_unit_interval_and_chi_is_best(
        horizon in 2u64..2000,
        arms in 2usize..6,
        seed in any::<u64>(),
        sigma in prop::option::of(0.0f64..0.5),
    ) {
        let cfg = AdversaryConfig { sigma, ..AdversaryConfig::new(horizon, arms, 1.0, seed) };
        let seq = generate(&cfg).unwrap();
        let chi = seq.chi().unwrap();
        for t in 1..=horizon {
            let best = seq.loss(t, chi);
            for x in 0..arms {
                let l = seq.loss(t, x);
                prop_assert!((0.0..=1.0).contains(&l));
                prop_assert!(best <= l);
                if x != chi {
                    let gap = seq.unclipped(t, x).unwrap() - seq.unclipped(t, chi).unwrap();
                    prop_assert!((gap - seq.epsilon()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic(horizon in 2u64..500, seed in any::<u64>(), binary in any::<bool>()) {
        let cfg = AdversaryConfig {
            variant: if binary { Variant::Binary } else { Variant::Clipped },
            ..AdversaryConfig::new(horizon, 3, 1.0, seed)
        };
        prop_assert_eq!(generate(&cfg).unwrap().to_table(), generate(&cfg).unwrap().to_table());
    }

    #[test]
    fn binary_losses_are_bits(horizon in 2u64..300, seed in any::<u64>()) {
        let cfg = AdversaryConfig { variant: Variant::Binary, ..AdversaryConfig::new(horizon, 2, 1.0, seed) };
        let seq = generate(&cfg).unwrap();
        prop_assert!(seq.to_table().iter().all(|&l| l == 0.0 || l == 1.0));
    }
}

#[test]
fn no_clipping_with_probability_five_sixths() {
    for horizon in [6u64, 64, 1024] {
        let est = clipping_free_rate(&AdversaryConfig::new(horizon, 2, 1.0, 0), 2000, 13).unwrap();
        let floor = 5.0 / 6.0 - 3.0 * binomial_se(5.0 / 6.0, 2000);
        assert!(est.rate() >= floor, "T = {horizon}: {}", est.rate());
    }
}

#[test]
fn clipping_flag_matches_recomputation() {
    for seed in 0..200 {
        // A large σ makes clipping common.
        let cfg = AdversaryConfig { sigma: Some(0.08), ..AdversaryConfig::new(256, 2, 1.0, seed) };
        let seq = generate(&cfg).unwrap();
        assert_eq!(seq.clipping_free_at_generation(), Some(seq.clipping_event_holds().unwrap()));
    }
}

#[test]
fn binary_coins_average_to_clipped_values() {
    let base = AdversaryConfig {
        variant: Variant::Binary,
        sigma: Some(0.1),
        ..AdversaryConfig::new(16, 2, 1.0, 404)
    };
    let draws = 4000u64;
    let reference = generate(&base).unwrap();
    let mut sums = vec![0.0; 32];
    for salt in 0..draws {
        let seq = generate(&AdversaryConfig { coin_seed: Some(salt), ..base.clone() }).unwrap();
        for (i, s) in sums.iter_mut().enumerate() {
            *s += seq.loss(i as u64 / 2 + 1, i % 2);
        }
    }
    for (i, s) in sums.iter().enumerate() {
        let (t, x) = (i as u64 / 2 + 1, i % 2);
        let p = reference.clipped_value(t, x);
        let mean = s / draws as f64;
        let se = binomial_se(p, draws).max(1e-12);
        assert!((mean - p).abs() <= 4.0 * se, "t = {t}, x = {x}: {mean} vs {p}");
    }
}

#[test]
fn chi_is_uniform() {
    let arms = 4usize;
    let n = 10_000u64;
    let mut counts = vec![0u64; arms];
    for seed in 0..n {
        let seq = generate(&AdversaryConfig::new(8, arms, 1.0, seed)).unwrap();
        counts[seq.chi().unwrap()] += 1;
    }
    let expected = n as f64 / arms as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new((arms - 1) as f64).unwrap().inverse_cdf(1.0 - 0.001);
    assert!(stat < critical, "chi-squared {stat} >= {critical}, counts {counts:?}");
}

#[test]
fn overrides_are_flagged() {
    assert!(!AdversaryConfig::new(8, 2, 1.0, 0).has_overrides());
    let cfg = AdversaryConfig { chi: Some(1), ..AdversaryConfig::new(8, 2, 1.0, 0) };
    assert!(cfg.has_overrides());
}

#[test]
fn switch_cost_scales_the_gap() {
    let a = generate(&AdversaryConfig::new(1000, 2, 1.0, 1)).unwrap();
    let b = generate(&AdversaryConfig::new(1000, 2, 8.0, 1)).unwrap();
    assert!((b.epsilon() - 2.0 * a.epsilon()).abs() < 1e-15);
    assert_eq!(a.sigma(), b.sigma());
}
