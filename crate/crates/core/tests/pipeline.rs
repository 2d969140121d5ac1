use proptest::prelude::*;

use ringkey_core::channel::Snr;
use ringkey_core::functionals::FunctionalKind;
use ringkey_core::keygen::{measure_errors, select_method1, select_method2, SelectionPolicy};
use ringkey_core::optimizer::{optimize, OptimizationProblem};
use ringkey_core::protocol::{agree, AgreementPlan};
use ringkey_core::security::{min_kept_bits, SecurityTargets};
use ringkey_core::seed::rng_from_seed;
use ringkey_core::source::{KeySource, PhysicalSource, SyntheticSource};
use ringkey_core::stats::{pe_closed_form, ProbabilityEstimate};

fn synthetic(rho: f64, snr: f64) -> SyntheticSource {
    SyntheticSource::new(rho, Snr::new(snr).unwrap()).unwrap()
}

#[test]
fn unconditioned_eavesdropper_error_matches_closed_form_for_every_seed() {
    let src = synthetic(0.8, f64::INFINITY);
    let expected = pe_closed_form(0.8).unwrap();
    for seed in 0..5 {
        let run = src.run(200_000, &mut rng_from_seed(seed));
        let key = select_method1(&run, 0.0).unwrap();
        let e = measure_errors(&key).unwrap();
        let est = ProbabilityEstimate::from_counts(
            (e.eavesdropper_error * e.kept as f64).round() as usize,
            e.kept,
        );
        assert!(
            est.agrees_with(expected, 4.0),
            "seed {seed}: {est:?} vs {expected}"
        );
    }
}

#[test]
fn conditioning_on_reliable_positions_helps_the_eavesdropper_consistently() {
    // Kept positions have large |x|, which E's sign also tends to match.
    let src = synthetic(0.8, 100.0);
    let rates: Vec<f64> = (0..4)
        .map(|seed| {
            let run = src.run(100_000, &mut rng_from_seed(seed));
            measure_errors(&select_method1(&run, 0.5).unwrap())
                .unwrap()
                .eavesdropper_error
        })
        .collect();
    let unconditioned = pe_closed_form(0.8).unwrap();
    for r in &rates {
        assert!(*r < unconditioned);
    }
    let spread =
        rates.iter().cloned().fold(0.0, f64::max) - rates.iter().cloned().fold(1.0, f64::min);
    assert!(spread < 0.01, "{rates:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kept_set_is_shared_and_ordered(seed in 0u64..1000, rho in -1.0f64..1.0, alpha in 0.0f64..1.5, m in 1usize..2000) {
        let run = synthetic(rho, 20.0).run(2000, &mut rng_from_seed(seed));
        for key in [select_method1(&run, alpha), select_method2(&run, m)].into_iter().flatten() {
            prop_assert_eq!(key.bits_a.len(), key.n_kept());
            prop_assert_eq!(key.bits_b.len(), key.n_kept());
            prop_assert_eq!(key.bits_e.len(), key.n_kept());
            prop_assert!(key.kept_indices.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(key.kept_indices.last().is_none_or(|&j| j < run.len()));
        }
    }

    #[test]
    fn zero_threshold_equals_keeping_everything(seed in 0u64..1000, rho in -1.0f64..1.0) {
        let run = synthetic(rho, 10.0).run(1500, &mut rng_from_seed(seed));
        let a = select_method1(&run, 0.0).unwrap();
        let b = select_method2(&run, run.len()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn legal_error_falls_with_threshold(seed in 0u64..1000, rho in 0.0f64..1.0) {
        let run = synthetic(rho, 10.0).run(20_000, &mut rng_from_seed(seed));
        let loose = measure_errors(&select_method1(&run, 0.0).unwrap()).unwrap();
        let tight = measure_errors(&select_method1(&run, 0.5).unwrap()).unwrap();
        prop_assert!(tight.legal_error < loose.legal_error);
        prop_assert!(tight.erasure_rate > loose.erasure_rate);
    }
}

#[test]
fn synthetic_keys_agree_end_to_end() {
    let budget = min_kept_bits(&SecurityTargets::new(256), 0.15, 0.01, 1_000_000).unwrap();
    let plan = AgreementPlan {
        source: KeySource::Synthetic(synthetic(0.8, 100.0)),
        policy: SelectionPolicy::TopM { m_keep: 1800 },
        block_len: 2000,
        budget,
    };
    for seed in 0..5 {
        let out = agree(&plan, seed).unwrap();
        assert!(out.keys_match(), "seed {seed}");
        assert_eq!(out.key_b.len(), 256);
    }
}

#[test]
fn physical_keys_agree_end_to_end() {
    let src = PhysicalSource::reference_setup(
        20.0,
        Snr::new(100.0).unwrap(),
        FunctionalKind::PhaseDifference,
    )
    .unwrap();
    let budget = min_kept_bits(&SecurityTargets::new(128), 0.18, 0.06, 1_000_000).unwrap();
    let plan = AgreementPlan {
        source: KeySource::Physical(src),
        policy: SelectionPolicy::Threshold { alpha: 0.05 },
        block_len: 10_000,
        budget,
    };
    let out = agree(&plan, 3).unwrap();
    assert!(out.keys_match());
    assert!(out.raw_disagreements > 0);
    assert!(out.eavesdropper_disagreements > out.raw_disagreements);
}

#[test]
fn optimizer_winner_survives_reverification() {
    let problem = OptimizationProblem {
        source: KeySource::Synthetic(synthetic(0.9, 100.0)),
        targets: SecurityTargets::new(128),
        search_grid: (0..6)
            .map(|k| SelectionPolicy::Threshold {
                alpha: 0.1 * k as f64,
            })
            .collect(),
        block_len: 10_000,
        n_cap: 10_000_000,
    };
    let result = optimize(&problem, 50_000, 11).unwrap();
    assert!(result.best.verify(&problem.targets));
    for c in result.candidates.iter().flatten() {
        assert!(c.verify(&problem.targets));
        assert!(c.key_rate <= result.best.key_rate);
    }
}
