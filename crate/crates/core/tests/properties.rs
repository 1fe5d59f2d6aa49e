//! Property-based tests for the solver invariants.

use lro_core::{
    band_worst_case, dirichlet_coverage, dual_objective, ks_band, profile_mean_interval,
    project_onto_simplex, select_gamma, worst_case_expectation, DofRule, KsQuantileRule,
    LikelihoodSet, ObservationSet, PayoffVector, SupportBounds,
};
use proptest::prelude::*;

fn arb_counts(n: usize) -> impl Strategy<Value = Vec<u64>> {
    proptest::collection::vec(0u64..20, n).prop_filter("needs one observation", |c| {
        c.iter().any(|&v| v > 0)
    })
}

fn arb_payoffs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-10.0f64..10.0, n)
}

fn make_set(counts: &[u64], gamma_slack: f64) -> LikelihoodSet {
    let support: Vec<f64> = (0..counts.len()).map(|i| i as f64).collect();
    let obs = ObservationSet::from_scalar(&support, counts).unwrap();
    let gamma = lro_core::obs::max_log_likelihood(&obs) - gamma_slack;
    LikelihoodSet::new(obs, gamma).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn value_between_min_payoff_and_empirical_mean(
        counts in arb_counts(4),
        h in arb_payoffs(4),
        slack in 0.001f64..5.0,
    ) {
        let set = make_set(&counts, slack);
        let payoffs = PayoffVector::new(h.clone()).unwrap();
        let sol = worst_case_expectation(&set, &payoffs).unwrap();
        let min_h = h.iter().cloned().fold(f64::INFINITY, f64::min);
        let mle_mean: f64 = set.observations().mle().iter().zip(&h).map(|(p, v)| p * v).sum();
        prop_assert!(sol.value >= min_h - 1e-9, "value {} below min {}", sol.value, min_h);
        prop_assert!(sol.value <= mle_mean + 1e-9, "value {} above MLE mean {}", sol.value, mle_mean);
    }

    #[test]
    fn monotone_in_gamma(
        counts in arb_counts(4),
        h in arb_payoffs(4),
        slack1 in 0.001f64..3.0,
        extra in 0.001f64..3.0,
    ) {
        let tight = make_set(&counts, slack1);
        let loose = make_set(&counts, slack1 + extra);
        let payoffs = PayoffVector::new(h).unwrap();
        let v_tight = worst_case_expectation(&tight, &payoffs).unwrap().value;
        let v_loose = worst_case_expectation(&loose, &payoffs).unwrap().value;
        // Larger set (smaller gamma) -> smaller minimum.
        prop_assert!(v_loose <= v_tight + 1e-8, "loose {v_loose} > tight {v_tight}");
    }

    #[test]
    fn translation_and_scaling_equivariance(
        counts in arb_counts(3),
        h in arb_payoffs(3),
        c in -5.0f64..5.0,
        scale in 0.1f64..4.0,
        slack in 0.01f64..4.0,
    ) {
        let set = make_set(&counts, slack);
        let base = worst_case_expectation(&set, &PayoffVector::new(h.clone()).unwrap()).unwrap();
        let shifted: Vec<f64> = h.iter().map(|v| v + c).collect();
        let shifted_sol =
            worst_case_expectation(&set, &PayoffVector::new(shifted).unwrap()).unwrap();
        prop_assert!((shifted_sol.value - (base.value + c)).abs() < 1e-7,
            "shift: {} vs {}", shifted_sol.value, base.value + c);
        let scaled: Vec<f64> = h.iter().map(|v| v * scale).collect();
        let scaled_sol =
            worst_case_expectation(&set, &PayoffVector::new(scaled).unwrap()).unwrap();
        prop_assert!((scaled_sol.value - scale * base.value).abs() < 1e-7 * (1.0 + scale),
            "scale: {} vs {}", scaled_sol.value, scale * base.value);
        for (a, b) in scaled_sol.distribution.iter().zip(&base.distribution) {
            prop_assert!((a - b).abs() < 1e-6, "distribution changed under scaling");
        }
    }

    #[test]
    fn certificates_on_random_instances(
        counts in arb_counts(4),
        h in arb_payoffs(4),
        slack in 0.05f64..4.0,
    ) {
        let set = make_set(&counts, slack);
        let payoffs = PayoffVector::new(h.clone()).unwrap();
        let sol = worst_case_expectation(&set, &payoffs).unwrap();
        let sum: f64 = sol.distribution.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-8);
        prop_assert!(sol.distribution.iter().all(|&p| p >= 0.0));
        prop_assert!(sol.kkt_residual <= 1e-6, "kkt {}", sol.kkt_residual);
        // Strong duality at the returned certificates.
        if sol.lambda > 0.0 {
            let mu = sol.mu.scalar().unwrap();
            let gap = (dual_objective(&set, &payoffs, sol.lambda, mu) - sol.value).abs();
            prop_assert!(gap <= 1e-6, "duality gap {gap}");
        }
        // Likelihood constraint active for non-constant payoffs below the
        // maximum likelihood.
        let h_min = h.iter().cloned().fold(f64::INFINITY, f64::min);
        let h_max = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if h_max > h_min && sol.lambda > 0.0 {
            let loglik = set.observations().log_likelihood(&sol.distribution);
            prop_assert!((loglik - set.gamma()).abs() <= 1e-5, "activeness {}", loglik - set.gamma());
        }
    }

    #[test]
    fn constrained_solve_with_sample_moments_is_certified(
        counts in arb_counts(4),
        h in arb_payoffs(4),
        slack in 0.2f64..4.0,
    ) {
        use lro_core::{ConstraintRow, LinearConstraints, RowSense,
            worst_case_expectation_constrained};
        let support: Vec<f64> = (0..counts.len()).map(|i| i as f64).collect();
        let obs = ObservationSet::from_scalar(&support, &counts).unwrap();
        let n = obs.total() as f64;
        let mean: f64 =
            support.iter().zip(&counts).map(|(d, &c)| d * c as f64).sum::<f64>() / n;
        let m2: f64 =
            support.iter().zip(&counts).map(|(d, &c)| d * d * c as f64).sum::<f64>() / n;
        let cons = LinearConstraints::mean_equals(&support, mean).unwrap()
            .and(ConstraintRow {
                coeffs: support.iter().map(|d| d * d).collect(),
                rhs: m2,
                sense: RowSense::Eq,
            })
            .unwrap();
        let gamma = lro_core::obs::max_log_likelihood(&obs) - slack;
        let set = LikelihoodSet::with_constraints(obs.clone(), gamma, cons).unwrap();
        let payoffs = PayoffVector::new(h.clone()).unwrap();
        let sol = worst_case_expectation_constrained(&set, &payoffs).unwrap();
        prop_assert!(sol.kkt_residual <= 1e-5, "kkt {}", sol.kkt_residual);
        let sum: f64 = sol.distribution.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-6, "sum {sum}");
        prop_assert!(sol.distribution.iter().all(|&p| p >= 0.0));
        // Moment rows hold at the reported worst case.
        let got_mean: f64 =
            support.iter().zip(&sol.distribution).map(|(d, p)| d * p).sum();
        prop_assert!((got_mean - mean).abs() <= 1e-5, "mean {got_mean} vs {mean}");
        // The constrained worst case cannot be worse than the unconstrained.
        let plain = worst_case_expectation(
            &LikelihoodSet::new(obs, gamma).unwrap(), &payoffs).unwrap();
        prop_assert!(sol.value >= plain.value - 1e-6,
            "constrained {} below unconstrained {}", sol.value, plain.value);
    }

    #[test]
    fn outer_value_concave_along_segments(
        counts in arb_counts(3),
        slack in 0.05f64..3.0,
        x1 in 0.0f64..6.0,
        x2 in 0.0f64..6.0,
    ) {
        // Newsvendor-style reward: concave in x for each scenario.
        let set = make_set(&counts, slack);
        let support = set.observations().scalar_support().unwrap();
        let g = |x: f64| {
            let payoffs: Vec<f64> = support.iter().map(|&d| -(x - d).abs()).collect();
            worst_case_expectation(&set, &PayoffVector::new(payoffs).unwrap())
                .unwrap()
                .value
        };
        let g1 = g(x1);
        let g2 = g(x2);
        for t in [0.25, 0.5, 0.75] {
            let xm = t * x1 + (1.0 - t) * x2;
            prop_assert!(g(xm) >= t * g1 + (1.0 - t) * g2 - 1e-6);
        }
    }

    #[test]
    fn gamma_selection_monotone_in_alpha(
        counts in arb_counts(3),
        a1 in 0.01f64..0.98,
        bump in 0.001f64..0.01,
    ) {
        let support: Vec<f64> = (0..counts.len()).map(|i| i as f64).collect();
        let obs = ObservationSet::from_scalar(&support, &counts).unwrap();
        let lo = select_gamma(&obs, a1, DofRule::SupportMinusOne).unwrap();
        let hi = select_gamma(&obs, a1 + bump, DofRule::SupportMinusOne).unwrap();
        // Larger alpha (lower confidence) -> larger gamma -> smaller set.
        prop_assert!(hi.gamma >= lo.gamma - 1e-12);
    }

    #[test]
    fn dirichlet_coverage_antitone_in_gamma(
        counts in arb_counts(3),
        g1 in -40.0f64..-5.0,
        drop in 0.5f64..20.0,
        seed in 0u64..1000,
    ) {
        let support: Vec<f64> = (0..counts.len()).map(|i| i as f64).collect();
        let obs = ObservationSet::from_scalar(&support, &counts).unwrap();
        let c_tight = dirichlet_coverage(&obs, g1, 400, seed).unwrap();
        let c_loose = dirichlet_coverage(&obs, g1 - drop, 400, seed).unwrap();
        prop_assert!(c_loose >= c_tight);
    }

    #[test]
    fn profile_interval_shrinks_when_counts_double(
        c1 in 1u64..15,
        c2 in 1u64..15,
        c3 in 1u64..15,
        alpha in 0.05f64..0.5,
    ) {
        let support = [0.0, 1.0, 2.5];
        let d = [0.0, 1.0, 2.5];
        let obs1 = ObservationSet::from_scalar(&support, &[c1, c2, c3]).unwrap();
        let obs2 = ObservationSet::from_scalar(&support, &[2 * c1, 2 * c2, 2 * c3]).unwrap();
        let i1 = profile_mean_interval(&obs1, &d, alpha).unwrap();
        let i2 = profile_mean_interval(&obs2, &d, alpha).unwrap();
        prop_assert!(i2.theta_lo >= i1.theta_lo - 1e-7);
        prop_assert!(i2.theta_hi <= i1.theta_hi + 1e-7);
    }

    #[test]
    fn band_value_antitone_in_band_width(
        widen in 0.01f64..0.3,
        shift in -1.0f64..1.0,
    ) {
        let samples = [0.0 + shift, 1.0 + shift, 2.0 + shift, 3.5 + shift];
        let narrow = ks_band(&samples, 0.5, KsQuantileRule::User(0.2)).unwrap();
        let wide = ks_band(&samples, 0.5, KsQuantileRule::User(0.2 + widen)).unwrap();
        let bounds = SupportBounds::new(-2.0 + shift, 5.0 + shift).unwrap();
        let h = |x: f64| -(x - 1.5 - shift) * (x - 1.5 - shift);
        let v_narrow = band_worst_case(&narrow, h, bounds).unwrap().value;
        let v_wide = band_worst_case(&wide, h, bounds).unwrap().value;
        prop_assert!(v_wide <= v_narrow + 1e-9, "wide {v_wide} > narrow {v_narrow}");
    }

    #[test]
    fn simplex_projection_is_idempotent_and_feasible(
        v in proptest::collection::vec(-3.0f64..3.0, 1..6),
    ) {
        let p = project_onto_simplex(&v);
        let sum: f64 = p.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        let pp = project_onto_simplex(&p);
        for (a, b) in p.iter().zip(&pp) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
