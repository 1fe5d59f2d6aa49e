//! Grid certification of the outer optimizers and Monte-Carlo validation of
//! the KS band, using only oracle-side search on top of black-box inner
//! evaluations.

use lro_core::rng;
use lro_core::{
    band_optimize_scalar, band_worst_case, ks_band, optimize_simplex, worst_case_expectation,
    DecisionProblem, FeasibleSet, KsQuantileRule, LikelihoodSet, ObservationSet, PayoffVector,
    SupportBounds,
};
use lro_oracle as oracle;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The 2x2 matrix game has value 1/2; the x-grid at step 1e-3 certifies the
/// simplex optimizer against the closed form.
#[test]
fn matrix_game_certified_by_x_grid() {
    let obs = ObservationSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1, 1]).unwrap();
    let set = LikelihoodSet::new(obs, -1e6).unwrap();
    let problem = DecisionProblem::new(
        Box::new(|x: &[f64], xi: &[f64]| dot(xi, x)),
        FeasibleSet::Simplex { dim: 2 },
    )
    .unwrap();
    let res = optimize_simplex(&problem, &set).unwrap();

    let g = |t: f64| {
        let payoffs = PayoffVector::new(vec![t, 1.0 - t]).unwrap();
        worst_case_expectation(&set, &payoffs).unwrap().value
    };
    let (grid_x, grid_v) = oracle::x_grid_max(g, 0.0, 1.0, 1000);
    assert!((grid_v - 0.5).abs() <= 1e-3, "grid value {grid_v}");
    assert!((grid_x - 0.5).abs() <= 1e-3, "grid argmax {grid_x}");
    assert!(res.value >= grid_v - 1e-3, "solver {} vs grid {grid_v}", res.value);
}

/// Coarse-simplex certification: the returned decision is within 1e-3 of
/// the best value on a 0.05-step feasibility grid, for several seeded
/// three-asset instances.
#[test]
fn simplex_solver_beats_the_coarse_grid() {
    let mut rng = rng::seeded(4242);
    for _ in 0..4 {
        let n_rows = 3 + (rng::uniform01(&mut rng) * 3.0) as usize;
        let rows: Vec<Vec<f64>> = (0..n_rows)
            .map(|_| (0..3).map(|_| rng::uniform01(&mut rng) * 0.2 - 0.05).collect())
            .collect();
        let obs = ObservationSet::new(rows.clone(), vec![1; n_rows]).unwrap();
        let gamma = lro_core::obs::max_log_likelihood(&obs) - 2.0;
        let set = LikelihoodSet::new(obs, gamma).unwrap();
        let problem = DecisionProblem::new(
            Box::new(|x: &[f64], xi: &[f64]| dot(xi, x)),
            FeasibleSet::Simplex { dim: 3 },
        )
        .unwrap();
        let res = optimize_simplex(&problem, &set).unwrap();
        let eval = |x: &[f64]| {
            let payoffs =
                PayoffVector::new(rows.iter().map(|xi| dot(xi, x)).collect()).unwrap();
            worst_case_expectation(&set, &payoffs).unwrap().value
        };
        let mut grid_best = f64::NEG_INFINITY;
        for point in oracle::simplex_grid_points(3, 0.05) {
            grid_best = grid_best.max(eval(&point));
        }
        assert!(
            res.value >= grid_best - 1e-3,
            "solver {} below coarse-grid best {grid_best}",
            res.value
        );
    }
}

/// Integer-grid certification of the newsvendor outer decision on the full
/// 0..200 grid with a seeded truncated-normal sample: the oracle's own scan
/// over the integer decisions must agree with the solver.
#[test]
fn newsvendor_decision_certified_on_the_full_grid() {
    // Deterministic pseudo-sample, independent of the CLI generator.
    let mut rng = rng::seeded(9001);
    let mut counts = vec![0u64; 201];
    let mut drawn = 0;
    while drawn < 1000 {
        // Box-Muller on the oracle side.
        let u1 = 1.0 - rng::uniform01(&mut rng);
        let u2 = rng::uniform01(&mut rng);
        let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        let y = 50.0 + 50.0 * z;
        let k = y.round();
        if (0.0..=200.0).contains(&k) {
            counts[k as usize] += 1;
            drawn += 1;
        }
    }
    let inst = lro_core::NewsvendorInstance::new(1.0, 1.0, (0..=200).collect(), counts).unwrap();
    let gamma = lro_core::select_gamma(inst.observations(), 0.05, lro_core::DofRule::Explicit(100))
        .unwrap()
        .gamma;
    let res = lro_core::newsvendor_lro(&inst, gamma, None).unwrap();

    let set = LikelihoodSet::new(inst.observations().clone(), gamma).unwrap();
    let mut best = (0i64, f64::INFINITY);
    for x in 0..=200i64 {
        let cost = lro_core::evaluate_lro_measure(x, &set, &inst).unwrap();
        if cost < best.1 {
            best = (x, cost);
        }
    }
    assert!(
        (res.worst_case_cost - best.1).abs() <= 1e-9,
        "solver cost {} vs grid best {}",
        res.worst_case_cost,
        best.1
    );
    assert_eq!(res.decision, best.0, "decision differs from the exhaustive scan");
}

/// The asymptotic KS critical value is conservative: under U(0,1) the band
/// covers the true CDF at least `1 - alpha` of the time (within Monte-Carlo
/// error), estimated over 1e5 trials.
#[test]
fn ks_band_coverage_monte_carlo() {
    let n = 100usize;
    let alpha = 0.05;
    let d_crit = ((2.0 / alpha) as f64).ln().sqrt() / (2.0 * n as f64).sqrt();
    assert!((d_crit - 0.135_810_151_574_061_95).abs() < 1e-12);
    let trials = 100_000;
    let mut rng = rng::seeded(7001);
    let mut covered = 0u64;
    let mut sample = vec![0.0f64; n];
    for _ in 0..trials {
        for s in sample.iter_mut() {
            *s = rng::uniform01(&mut rng);
        }
        sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if oracle::ks_statistic_uniform(&sample) <= d_crit {
            covered += 1;
        }
    }
    let coverage = covered as f64 / trials as f64;
    let mc_error = 3.0 * (coverage * (1.0 - coverage) / trials as f64).sqrt();
    assert!(
        coverage >= 0.95 - mc_error,
        "coverage {coverage} below 0.95 - {mc_error}"
    );
}

/// A width-zero band pinned to a single CDF reduces the band-robust
/// newsvendor to the classical critical-fractile solution on the
/// discretized distribution, up to the knot spacing (mass still floats
/// inside each knot interval, an ambiguity that vanishes with the grid).
#[test]
fn degenerate_band_matches_the_critical_fractile() {
    let n = 50usize;
    let spacing = 0.1;
    let points: Vec<f64> = (1..=n).map(|k| k as f64 * spacing).collect(); // 0.1..5.0
    let f: Vec<f64> = (1..=n).map(|k| k as f64 / n as f64).collect();
    let band = lro_core::CdfBand::new(points.clone(), f.clone(), f.clone()).unwrap();
    let bounds = SupportBounds::new(0.0, 5.0).unwrap();
    let (b, h) = (3.0f64, 1.0f64);
    // Classical fractile b/(b+h) = 3/4 on the knot distribution.
    let fractile = b / (b + h);
    let classical = points[f.iter().position(|&v| v >= fractile - 1e-12).unwrap()];
    let problem = DecisionProblem::new(
        Box::new(move |x: &[f64], xi: &[f64]| {
            -(b * (xi[0] - x[0]).max(0.0) + h * (x[0] - xi[0]).max(0.0))
        }),
        FeasibleSet::Interval { lo: 0.0, hi: 5.0, integer: false },
    )
    .unwrap();
    let res = band_optimize_scalar(&problem, &band, bounds).unwrap();
    assert!(
        (res.decision[0] - classical).abs() <= spacing + 1e-6,
        "decision {} vs classical fractile {classical}",
        res.decision[0]
    );

    // Certify value-optimality with an x-grid scan of the band worst case.
    let g = |x: f64| {
        band_worst_case(
            &band,
            |xi| -(b * (xi - x).max(0.0) + h * (x - xi).max(0.0)),
            bounds,
        )
        .unwrap()
        .value
    };
    let (_, grid_v) = oracle::x_grid_max(g, 0.0, 5.0, 2000);
    assert!(res.value >= grid_v - 1e-3, "solver {} vs grid {grid_v}", res.value);
}

/// Seeded distinct samples, b = h: the band decision sits in the median
/// corridor of the band, certified by an x-grid scan.
#[test]
fn band_decision_lands_in_the_median_corridor() {
    let mut rng = rng::seeded(515);
    let mut samples: Vec<f64> = (0..40).map(|_| rng::uniform01(&mut rng) * 10.0).collect();
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    samples.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let band = ks_band(&samples, 0.05, KsQuantileRule::Asymptotic).unwrap();
    let bounds = SupportBounds::new(0.0, 10.0).unwrap();
    let problem = DecisionProblem::new(
        Box::new(|x: &[f64], xi: &[f64]| -((xi[0] - x[0]).abs())),
        FeasibleSet::Interval { lo: 0.0, hi: 10.0, integer: false },
    )
    .unwrap();
    let res = band_optimize_scalar(&problem, &band, bounds).unwrap();
    let g = |x: f64| {
        band_worst_case(&band, |xi| -((xi - x).abs()), bounds).unwrap().value
    };
    let (_, grid_v) = oracle::x_grid_max(g, 0.0, 10.0, 10_000);
    assert!(res.value >= grid_v - 1e-3, "solver {} vs grid {grid_v}", res.value);
    // Median corridor: the knots where L can still be below 1/2 and U above.
    let lo_idx = band.upper().iter().position(|&u| u >= 0.5).unwrap();
    let hi_idx = band.lower().iter().rposition(|&l| l <= 0.5).unwrap();
    let (corridor_lo, corridor_hi) = (band.points()[lo_idx], band.points()[hi_idx]);
    assert!(
        corridor_lo - 1e-9 <= res.decision[0] && res.decision[0] <= corridor_hi + 1e-9,
        "decision {} outside the median corridor [{corridor_lo}, {corridor_hi}]",
        res.decision[0]
    );
}

/// Moment-constrained inner solve vs the grid oracle with constraint
/// filtering on a four-point support (one point never observed). The grid
/// relaxes the equality rows by its own tolerance, so the agreement bound
/// is grid-resolution-dominated.
#[test]
fn constrained_inner_matches_the_filtered_grid() {
    let support = [0.0, 1.0, 2.0, 3.0];
    let counts = [1u64, 2, 0, 5];
    let obs = ObservationSet::from_scalar(&support, &counts).unwrap();
    let n_total = obs.total() as f64;
    let mean: f64 = support.iter().zip(&counts).map(|(d, &c)| d * c as f64).sum::<f64>() / n_total;
    let m2: f64 =
        support.iter().zip(&counts).map(|(d, &c)| d * d * c as f64).sum::<f64>() / n_total;
    let gamma = lro_core::obs::max_log_likelihood(&obs) - 1.2;
    let cons = lro_core::LinearConstraints::mean_equals(&support, mean)
        .unwrap()
        .and(lro_core::ConstraintRow {
            coeffs: support.iter().map(|d| d * d).collect(),
            rhs: m2,
            sense: lro_core::RowSense::Eq,
        })
        .unwrap();
    let set = lro_core::LikelihoodSet::with_constraints(obs.clone(), gamma, cons).unwrap();

    let mut rng = rng::seeded(606);
    for _ in 0..3 {
        let h: Vec<f64> = (0..4).map(|_| rng::uniform01(&mut rng)).collect();
        let payoffs = PayoffVector::new(h.clone()).unwrap();
        let sol = lro_core::worst_case_expectation_constrained(&set, &payoffs).unwrap();
        assert!(sol.kkt_residual <= 1e-6, "kkt {}", sol.kkt_residual);
        let filters = [
            oracle::GridConstraint {
                coeffs: support.to_vec(),
                rhs: mean,
                sense: lro_core::RowSense::Eq,
                tol: 5e-3,
            },
            oracle::GridConstraint {
                coeffs: support.iter().map(|d| d * d).collect(),
                rhs: m2,
                sense: lro_core::RowSense::Eq,
                tol: 5e-3,
            },
        ];
        let grid = oracle::simplex_grid_min(&obs, gamma, &h, 1e-3, &filters).unwrap();
        let dev = (sol.value - grid.value).abs();
        assert!(dev <= 2e-2, "solver {} vs filtered grid {} (dev {dev})", sol.value, grid.value);
    }
}
