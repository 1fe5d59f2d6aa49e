//! Likelihood-threshold calibration and empirical-likelihood machinery.
//!
//! The threshold is chosen from the asymptotic result
//!
//! ```text
//! gamma* = sum_i N_i ln(N_i/N) - chi2_{dof, 1-alpha} / 2
//! ```
//!
//! so that the likelihood set is an asymptotic `1 - alpha` confidence region
//! for the distribution under the Dirichlet posterior `Dir(N_1+1, ...,
//! N_n+1)`. `dirichlet_coverage` validates a chosen threshold by Monte
//! Carlo. The entropy CLT statistics give the limiting distribution of the
//! plug-in entropy that drives the threshold's fluctuations, and
//! `profile_mean_interval` builds the empirical-likelihood confidence
//! interval for the mean by bisecting the concave profile log-likelihood.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::obs::{max_log_likelihood, ObservationSet};
use crate::rng;

/// Degrees-of-freedom rule for the chi-square calibration.
///
/// The default is `SupportMinusOne` (the asymptotic chi-square result); the
/// observation-count rule is a heuristic that performs well for
/// portfolio-style data where every profile is observed once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofRule {
    SupportMinusOne,
    ObservationCount,
    Explicit(u64),
}

/// How a gamma value was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaBasis {
    AsymptoticChiSquare,
    UserSupplied,
}

/// A calibrated likelihood threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaChoice {
    pub gamma: f64,
    pub alpha: f64,
    pub dof: u64,
    pub basis: GammaBasis,
}

impl GammaChoice {
    /// Wrap an explicitly chosen threshold.
    pub fn user_supplied(gamma: f64) -> Self {
        Self { gamma, alpha: f64::NAN, dof: 0, basis: GammaBasis::UserSupplied }
    }
}

// --- chi-square quantile via the regularized incomplete gamma CDF ---------

/// Regularized lower incomplete gamma `P(a, x)`; series for `x < a + 1`,
/// continued fraction otherwise (Lentz's method).
fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let lg = math::lgamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut k = a;
        for _ in 0..500 {
            k += 1.0;
            term *= x / k;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        sum * math::exp(-x + a * math::ln(x) - lg)
    } else {
        // Continued fraction for Q(a, x).
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        let q = math::exp(-x + a * math::ln(x) - lg) * h;
        1.0 - q
    }
}

/// Chi-square CDF with `dof` degrees of freedom.
pub fn chi_square_cdf(dof: u64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_p(dof as f64 / 2.0, x / 2.0)
}

/// `q`-quantile of the chi-square distribution with `dof` degrees of
/// freedom, to an absolute accuracy of 1e-6, by bracketed bisection on the
/// CDF.
pub fn chi_square_quantile(dof: u64, q: f64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::DomainError("chi-square dof must be positive".into()));
    }
    if !(0.0 < q && q < 1.0) {
        return Err(Error::DomainError(format!("quantile level {q} outside (0,1)")));
    }
    let d = dof as f64;
    let mut hi = d + 10.0 * math::sqrt(2.0 * d) + 10.0;
    while chi_square_cdf(dof, hi) < q {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NumericalFailure("chi-square quantile bracket failed".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi_square_cdf(dof, mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Calibrate `gamma` so the likelihood set is an asymptotic `1 - alpha`
/// confidence region.
pub fn select_gamma(obs: &ObservationSet, alpha: f64, dof_rule: DofRule) -> Result<GammaChoice> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::DomainError(format!("alpha {alpha} outside (0,1)")));
    }
    let dof = match dof_rule {
        DofRule::SupportMinusOne => (obs.len() as u64).saturating_sub(1),
        DofRule::ObservationCount => obs.total(),
        DofRule::Explicit(k) => k,
    };
    let quantile = if dof == 0 { 0.0 } else { chi_square_quantile(dof, 1.0 - alpha)? };
    Ok(GammaChoice {
        gamma: max_log_likelihood(obs) - 0.5 * quantile,
        alpha,
        dof,
        basis: GammaBasis::AsymptoticChiSquare,
    })
}

/// Monte-Carlo coverage of `{ p : sum N_i ln p_i >= gamma }` under the
/// Dirichlet posterior `Dir(N_1+1, ..., N_n+1)`.
///
/// Sampling is by sum-normalized Erlang variates (integer shapes), drawn in
/// support order within each sample from the pinned seeded generator, so
/// coverage numbers are bit-reproducible for a given seed.
pub fn dirichlet_coverage(
    obs: &ObservationSet,
    gamma: f64,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be >= 1".into()));
    }
    let mut rng = rng::seeded(seed);
    let counts = obs.counts();
    let mut g = vec![0.0f64; counts.len()];
    let mut hits = 0u64;
    for _ in 0..samples {
        let mut total = 0.0;
        for (i, &c) in counts.iter().enumerate() {
            let v = rng::erlang(&mut rng, c + 1);
            g[i] = v;
            total += v;
        }
        let mut loglik = 0.0;
        for (i, &c) in counts.iter().enumerate() {
            if c > 0 {
                loglik += c as f64 * math::ln(g[i] / total);
            }
        }
        if loglik >= gamma {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples as f64)
}

/// Center and limiting variance of the plug-in entropy statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyCltStats {
    /// `sum_i p_i ln p_i` (negative entropy, nats).
    pub center: f64,
    /// Variance of `X_0 = sum_i (1 + ln p_i) X_i` with `X ~ N(0, Sigma)`,
    /// `Sigma` the multinomial covariance of `p`.
    pub limit_variance: f64,
}

/// Statistics of the entropy CLT at the true distribution `p_bar`.
pub fn entropy_clt_stats(p_bar: &[f64]) -> Result<EntropyCltStats> {
    if p_bar.is_empty() {
        return Err(Error::DomainError("p_bar must be nonempty".into()));
    }
    if p_bar.iter().any(|&p| p <= 0.0) {
        return Err(Error::DomainError("p_bar entries must be strictly positive".into()));
    }
    let sum: f64 = p_bar.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::DomainError(format!("p_bar sums to {sum}, expected 1")));
    }
    let v: Vec<f64> = p_bar.iter().map(|&p| 1.0 + math::ln(p)).collect();
    let center: f64 = p_bar.iter().map(|&p| p * math::ln(p)).sum();
    // Quadratic form v' Sigma v with Sigma_ij = p_i (delta_ij - p_j).
    let mut variance = 0.0;
    for i in 0..p_bar.len() {
        for j in 0..p_bar.len() {
            let sigma = if i == j { p_bar[i] * (1.0 - p_bar[i]) } else { -p_bar[i] * p_bar[j] };
            variance += v[i] * v[j] * sigma;
        }
    }
    Ok(EntropyCltStats { center, limit_variance: variance.max(0.0) })
}

/// Empirical-likelihood confidence interval for a mean parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileLikelihoodInterval {
    pub theta_lo: f64,
    pub theta_hi: f64,
    /// The profile log-likelihood level defining the endpoints:
    /// `max_log_likelihood - chi2_{1,1-alpha}/2`.
    pub target_loglik: f64,
}

/// Profile log-likelihood `z(theta) = max { sum N_i ln p_i : p on the
/// simplex, sum d_i p_i = theta }`.
///
/// Solved through the standard one-multiplier empirical-likelihood dual:
/// `p_i = (N_i/N) / (1 + s (d_i - theta))` where `s` is the root of the
/// strictly decreasing `sum_i N_i (d_i - theta) / (1 + s (d_i - theta))`,
/// found by safeguarded Newton to 1e-10 on the mean constraint.
pub fn profile_log_likelihood(obs: &ObservationSet, d: &[f64], theta: f64) -> Result<f64> {
    let counts = obs.counts();
    if d.len() != counts.len() {
        return Err(Error::InvalidInput("payoff length != support length".into()));
    }
    let n_total = obs.total() as f64;
    let observed: Vec<(f64, f64)> = counts
        .iter()
        .zip(d)
        .filter(|(&c, _)| c > 0)
        .map(|(&c, &di)| (c as f64, di))
        .collect();
    let d_min = observed.iter().fold(f64::INFINITY, |a, &(_, d)| a.min(d));
    let d_max = observed.iter().fold(f64::NEG_INFINITY, |a, &(_, d)| a.max(d));
    if !(d_min < theta && theta < d_max) {
        if theta == d_min || theta == d_max {
            // All mass on the extreme-attaining points.
            let extreme: f64 = observed
                .iter()
                .filter(|&&(_, di)| di == theta)
                .map(|&(c, _)| c)
                .sum();
            if extreme < n_total {
                return Ok(f64::NEG_INFINITY);
            }
            return Ok(0.0);
        }
        return Err(Error::DomainError(format!(
            "theta {theta} outside the observed payoff hull [{d_min}, {d_max}]"
        )));
    }

    // Root of f(s) = sum c_i (d_i - theta) / (1 + s (d_i - theta)) on the
    // interval where all denominators stay positive.
    let mut s_lo = f64::NEG_INFINITY;
    let mut s_hi = f64::INFINITY;
    for &(_, di) in &observed {
        let dd = di - theta;
        if dd > 0.0 {
            s_lo = s_lo.max(-1.0 / dd);
        } else if dd < 0.0 {
            s_hi = s_hi.min(-1.0 / dd);
        }
    }
    let span = s_hi - s_lo;
    let mut a = s_lo + 1e-12 * span.max(1.0);
    let mut b = s_hi - 1e-12 * span.max(1.0);
    let f = |s: f64| -> f64 {
        observed.iter().map(|&(c, di)| c * (di - theta) / (1.0 + s * (di - theta))).sum()
    };
    // f is decreasing: f(a) > 0 > f(b) for interior theta.
    let mut s = 0.0;
    if f(0.0) != 0.0 {
        if f(a) < 0.0 || f(b) > 0.0 {
            return Err(Error::NumericalFailure(
                "profile likelihood dual lost its bracket".into(),
            ));
        }
        s = 0.5 * (a + b);
        for _ in 0..200 {
            let fs = f(s);
            if fs.abs() <= 1e-10 * n_total {
                break;
            }
            if fs > 0.0 {
                a = s;
            } else {
                b = s;
            }
            // Newton step, safeguarded by the bracket.
            let fprime: f64 = observed
                .iter()
                .map(|&(c, di)| {
                    let t = 1.0 + s * (di - theta);
                    -c * (di - theta) * (di - theta) / (t * t)
                })
                .sum();
            let mut next = if fprime < 0.0 { s - fs / fprime } else { 0.5 * (a + b) };
            if !(a < next && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - s).abs() <= 1e-16 * (1.0 + s.abs()) {
                s = next;
                break;
            }
            s = next;
        }
    }
    let mut z = 0.0;
    for &(c, di) in &observed {
        let p = (c / n_total) / (1.0 + s * (di - theta));
        if p <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        z += c * math::ln(p);
    }
    Ok(z)
}

/// Empirical-likelihood confidence interval for the mean of payoff `d`.
///
/// The profile `z(theta)` is concave, peaks at the empirical mean with value
/// `max_log_likelihood`, and diverges to `-inf` at the observed payoff
/// extremes, so each side of the mean holds exactly one crossing of the
/// target level; both are found by bisection.
pub fn profile_mean_interval(
    obs: &ObservationSet,
    d: &[f64],
    alpha: f64,
) -> Result<ProfileLikelihoodInterval> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::DomainError(format!("alpha {alpha} outside (0,1)")));
    }
    if obs.observed_count() < 2 {
        return Err(Error::InvalidInput("need >= 2 distinct observed outcomes".into()));
    }
    let counts = obs.counts();
    if d.len() != counts.len() {
        return Err(Error::InvalidInput("payoff length != support length".into()));
    }
    let observed_d: Vec<f64> = counts
        .iter()
        .zip(d)
        .filter(|(&c, _)| c > 0)
        .map(|(_, &di)| di)
        .collect();
    let d_min = observed_d.iter().cloned().fold(f64::INFINITY, f64::min);
    let d_max = observed_d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if d_min == d_max {
        return Err(Error::InvalidInput("payoff vector is constant on observed points".into()));
    }
    let n_total = obs.total() as f64;
    let theta_hat: f64 = counts
        .iter()
        .zip(d)
        .map(|(&c, &di)| c as f64 * di)
        .sum::<f64>()
        / n_total;
    let gamma_max = max_log_likelihood(obs);
    let target = gamma_max - 0.5 * chi_square_quantile(1, 1.0 - alpha)?;

    let span = d_max - d_min;
    let eps = 1e-12 * span;
    let bisect = |mut lo: f64, mut hi: f64, rising: bool| -> Result<f64> {
        // Find theta with z(theta) = target; `rising` indicates z increases
        // from lo to hi.
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let z = profile_log_likelihood(obs, d, mid)?;
            let below = z < target;
            if below == rising {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-11 * span {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    let theta_lo = bisect(d_min + eps, theta_hat, true)?;
    let theta_hi = bisect(theta_hat, d_max - eps, false)?;
    Ok(ProfileLikelihoodInterval { theta_lo, theta_hi, target_loglik: target })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_closed_forms() {
        // Two degrees of freedom: quantile is -2 ln(1 - q).
        let q95 = chi_square_quantile(2, 0.95).unwrap();
        assert!((q95 - 5.991_464_547_107_979).abs() < 1e-6, "{q95}");
        // One degree of freedom, frozen from the quadrature oracle.
        let q95_1 = chi_square_quantile(1, 0.95).unwrap();
        assert!((q95_1 - 3.841_458_820_694_124).abs() < 1e-6, "{q95_1}");
        // Lower limit.
        let q_tiny = chi_square_quantile(2, 1e-12).unwrap();
        assert!(q_tiny < 1e-6, "{q_tiny}");
    }

    #[test]
    fn chi_square_quantile_rejects_bad_args() {
        assert!(chi_square_quantile(0, 0.5).is_err());
        assert!(chi_square_quantile(2, 0.0).is_err());
        assert!(chi_square_quantile(2, 1.0).is_err());
    }

    #[test]
    fn select_gamma_balanced_binary_counts() {
        let obs = ObservationSet::from_scalar(&[0.0, 1.0], &[500, 500]).unwrap();
        let choice = select_gamma(&obs, 0.05, DofRule::SupportMinusOne).unwrap();
        assert_eq!(choice.dof, 1);
        let expected = 1000.0 * 0.5f64.ln() - 0.5 * 3.841_458_820_694_124;
        assert!((choice.gamma - expected).abs() < 1e-6, "{}", choice.gamma);
        assert!((choice.gamma - (-695.068)).abs() < 1e-3);
    }

    #[test]
    fn select_gamma_alpha_near_one_recovers_the_mle() {
        let obs = ObservationSet::from_scalar(&[0.0, 1.0], &[3, 2]).unwrap();
        let choice = select_gamma(&obs, 1.0 - 1e-9, DofRule::SupportMinusOne).unwrap();
        let gamma_max = max_log_likelihood(&obs);
        assert!((choice.gamma - gamma_max).abs() < 1e-6);
    }

    #[test]
    fn select_gamma_single_observed_outcome() {
        let obs = ObservationSet::from_scalar(&[0.0, 1.0, 2.0], &[1, 0, 0]).unwrap();
        let choice = select_gamma(&obs, 0.05, DofRule::SupportMinusOne).unwrap();
        assert_eq!(choice.dof, 2);
        let expected = -0.5 * chi_square_quantile(2, 0.95).unwrap();
        assert!((choice.gamma - expected).abs() < 1e-12);
    }

    #[test]
    fn coverage_extremes() {
        let obs = ObservationSet::from_scalar(&[0.0, 1.0], &[5, 5]).unwrap();
        assert_eq!(dirichlet_coverage(&obs, -1e6, 500, 1).unwrap(), 1.0);
        let gamma_max = max_log_likelihood(&obs);
        assert_eq!(dirichlet_coverage(&obs, gamma_max, 500, 1).unwrap(), 0.0);
    }

    #[test]
    fn entropy_clt_uniform_variance_vanishes() {
        for n in [2usize, 5, 17] {
            let p = vec![1.0 / n as f64; n];
            let stats = entropy_clt_stats(&p).unwrap();
            assert!(stats.limit_variance.abs() <= 1e-12, "{}", stats.limit_variance);
            assert!((stats.center + (n as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_clt_two_point_expansion() {
        // Direct 2x2 expansion: variance = p1 p2 (ln(p1/p2))^2.
        let stats = entropy_clt_stats(&[0.9, 0.1]).unwrap();
        let expected = 0.9 * 0.1 * (0.9f64 / 0.1).ln().powi(2);
        assert!((stats.limit_variance - expected).abs() < 1e-12);
    }

    #[test]
    fn profile_peaks_at_the_empirical_mean() {
        let obs = ObservationSet::from_scalar(&[0.0, 1.0, 2.0], &[3, 1, 2]).unwrap();
        let d = [0.0, 1.0, 2.0];
        let theta_hat = (3.0 * 0.0 + 1.0 * 1.0 + 2.0 * 2.0) / 6.0;
        let z = profile_log_likelihood(&obs, &d, theta_hat).unwrap();
        assert!((z - max_log_likelihood(&obs)).abs() < 1e-9, "{z}");
    }

    #[test]
    fn symmetric_two_point_interval() {
        let obs = ObservationSet::from_scalar(&[0.0, 1.0], &[1, 1]).unwrap();
        let interval = profile_mean_interval(&obs, &[0.0, 1.0], 0.1).unwrap();
        assert!((interval.theta_lo + interval.theta_hi - 1.0).abs() < 1e-6);
        assert!(interval.theta_lo < 0.5 && 0.5 < interval.theta_hi);
    }

    #[test]
    fn three_one_counts_match_frozen_grid_oracle() {
        // counts (3,1), d = (0,1), alpha = 0.1; endpoints frozen from the
        // two-level grid oracle in lro-oracle.
        let obs = ObservationSet::from_scalar(&[0.0, 1.0], &[3, 1]).unwrap();
        let interval = profile_mean_interval(&obs, &[0.0, 1.0], 0.1).unwrap();
        assert!((interval.theta_lo - 0.029_85).abs() < 1e-3, "{}", interval.theta_lo);
        assert!((interval.theta_hi - 0.653_05).abs() < 1e-3, "{}", interval.theta_hi);
    }
}
