//! Generates the frozen oracle values cited in lro-core unit tests.
//! Each test recomputes the fixture from scratch and asserts the frozen
//! constant, so a drift in either side fails loudly.

use lro_core::ObservationSet;
use lro_oracle::*;

#[test]
fn freeze_inner_three_point_fixture() {
    let obs = ObservationSet::from_scalar(&[1.0, 2.0, 3.0], &[2, 1, 1]).unwrap();
    let gamma_max = lro_core::obs::max_log_likelihood(&obs);
    let chi2 = chi2_quantile_quadrature(2, 0.95);
    println!("chi2_2_095 = {chi2:.12}");
    let gamma = gamma_max - chi2 / 2.0;
    let res = simplex_grid_min(&obs, gamma, &[1.0, 2.0, 4.0], 1e-3, &[]).unwrap();
    println!("three_point fixture: value = {:.9} argmin = {:?} feas = {}", res.value, res.argmin, res.feasible_points);
}

#[test]
fn freeze_chi2_dof1() {
    let q = chi2_quantile_quadrature(1, 0.95);
    println!("chi2_1_095 = {q:.12}");
    assert!((q - 3.841458820694124).abs() < 1e-6, "{q}");
}

#[test]
fn freeze_profile_interval_3_1() {
    // counts (3,1), d = (0,1): mean theta forces p = (1-theta, theta).
    let gamma_max = 3.0 * (0.75f64).ln() + (0.25f64).ln();
    let target = gamma_max - chi2_quantile_quadrature(1, 0.90) / 2.0;
    let z = |theta: f64| 3.0 * (1.0 - theta).ln() + theta.ln();
    let mut lo_cross = None;
    let mut hi_cross = None;
    let mut crossings = 0;
    let steps = 10_000;
    let mut prev = z(1e-12) - target;
    for k in 1..steps {
        let theta = k as f64 / steps as f64;
        let cur = z(theta) - target;
        if prev < 0.0 && cur >= 0.0 {
            crossings += 1;
            lo_cross = Some(theta - 0.5e-4);
        }
        if prev >= 0.0 && cur < 0.0 {
            crossings += 1;
            hi_cross = Some(theta - 0.5e-4);
        }
        prev = cur;
    }
    println!("target = {target:.9}; crossings = {crossings}; lo = {:?} hi = {:?}", lo_cross, hi_cross);
    assert_eq!(crossings, 2);
}
