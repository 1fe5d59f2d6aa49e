//! Continuous-state robustness via CDF bands.
//!
//! A band fixes per-sample bounds `L_i <= F(X_i) <= U_i` on the unknown CDF;
//! the Kolmogorov-Smirnov band uses `L_i = i/n - D`, `U_i = (i-1)/n + D`
//! with `D` the KS-statistic quantile. For an objective concave in the
//! scenario, the worst case over all CDFs in the band reduces to a finite
//! LP in multipliers `(y, z, lambda)`:
//!
//! ```text
//! maximize   sum_i z_i L_i - sum_i y_i U_i + lambda
//! subject to h(X_{k-1}) >= sum_{i>=k} (z_i - y_i) + lambda,  k = 1..n+1
//!            h(X_k)     >= sum_{i>=k} (z_i - y_i) + lambda,  k = 1..n+1
//!            y, z >= 0,
//! ```
//!
//! where the unbounded end knots are truncated to user-declared support
//! bounds: `X_0 := xi_min`, `X_{n+1} := xi_max`. The module works on
//! rewards (values to be maximized, concave in the scenario); cost-style
//! applications negate at the app layer.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::outer::optimize_scalar_with;
use crate::problem::{DecisionProblem, FeasibleSet};
use crate::simplex_lp::{self, LpRow, LpSense, LpStatus, RowCmp};
use crate::OuterResult;

/// Per-sample CDF bounds over strictly increasing sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfBand {
    points: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl CdfBand {
    pub fn new(points: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::InvalidInput("band must have at least one point".into()));
        }
        if lower.len() != n || upper.len() != n {
            return Err(Error::InvalidInput("band bound lengths must match points".into()));
        }
        for w in points.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidInput(
                    "band points must be strictly increasing (duplicates rejected)".into(),
                ));
            }
        }
        for i in 0..n {
            if !(0.0..=1.0).contains(&lower[i]) || !(0.0..=1.0).contains(&upper[i]) {
                return Err(Error::InvalidInput(format!("band bounds at {i} outside [0,1]")));
            }
            if i > 0 && (lower[i] < lower[i - 1] || upper[i] < upper[i - 1]) {
                return Err(Error::InvalidInput(format!(
                    "band bounds must be nondecreasing (violated at {i})"
                )));
            }
        }
        // Monotone L and U admit a nondecreasing CDF selection iff the
        // bounds are pointwise ordered; the staircase check L_i <= U_j for
        // i <= j then follows.
        for i in 0..n {
            if lower[i] > upper[i] {
                return Err(Error::EmptyBand { margin: lower[i] - upper[i] });
            }
        }
        Ok(Self { points, lower, upper })
    }

    /// Construct without the emptiness check (test support for verifying
    /// that LP unboundedness agrees with the validator).
    #[cfg(test)]
    pub(crate) fn new_unchecked(points: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { points, lower, upper }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
}

/// Declared scenario support `[lo, hi]` replacing the infinite end knots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportBounds {
    pub lo: f64,
    pub hi: f64,
}

impl SupportBounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidInput("support bounds must be finite with lo <= hi".into()));
        }
        Ok(Self { lo, hi })
    }
}

/// Rule for the KS critical value `D_{n, 1-alpha}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KsQuantileRule {
    /// `D = sqrt(ln(2/alpha) / (2n))` (asymptotic, conservative via the
    /// Dvoretzky-Kiefer-Wolfowitz constant).
    Asymptotic,
    /// A caller-supplied exact small-sample quantile.
    User(f64),
}

/// Kolmogorov-Smirnov confidence band from sorted distinct samples.
pub fn ks_band(samples: &[f64], alpha: f64, rule: KsQuantileRule) -> Result<CdfBand> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::DomainError(format!("alpha {alpha} outside (0,1)")));
    }
    for w in samples.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::InvalidInput(
                "samples must be sorted and distinct (perturb ties before calling)".into(),
            ));
        }
    }
    let n = samples.len() as f64;
    let d = match rule {
        KsQuantileRule::Asymptotic => math::sqrt(math::ln(2.0 / alpha) / (2.0 * n)),
        KsQuantileRule::User(v) => {
            if !(v > 0.0) {
                return Err(Error::InvalidInput("user KS quantile must be positive".into()));
            }
            v
        }
    };
    let clamp = |v: f64| v.clamp(0.0, 1.0);
    let lower: Vec<f64> =
        (1..=samples.len()).map(|i| clamp(i as f64 / n - d)).collect();
    let upper: Vec<f64> =
        (1..=samples.len()).map(|i| clamp((i as f64 - 1.0) / n + d)).collect();
    CdfBand::new(samples.to_vec(), lower, upper)
}

/// Solution of the band robust counterpart LP.
#[derive(Debug, Clone)]
pub struct BandRobustSolution {
    /// `min_F E_F[h]` over the band.
    pub value: f64,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub lambda: f64,
    /// Knot indices `k` (1-based interval numbering, `1..n+1`) whose
    /// constraint is tight at the optimum.
    pub active_knots: Vec<usize>,
    /// Largest violation of the LP constraints by the returned multipliers.
    pub dual_residual: f64,
}

/// Worst-case expectation of a scenario-concave reward over all CDFs in the
/// band, by the finite LP above. Errors with [`Error::EmptyBand`] when the
/// LP is unbounded, which happens exactly when the band admits no CDF.
pub fn band_worst_case<H>(band: &CdfBand, h: H, bounds: SupportBounds) -> Result<BandRobustSolution>
where
    H: Fn(f64) -> f64,
{
    let n = band.len();
    let pts = band.points();
    if bounds.lo > pts[0] || bounds.hi < pts[n - 1] {
        return Err(Error::InvalidInput(
            "support bounds must contain all band points".into(),
        ));
    }
    // Knot sequence xi_min = K_0 <= X_1 < ... < X_n <= K_{n+1} = xi_max.
    let mut knots = Vec::with_capacity(n + 2);
    knots.push(bounds.lo);
    knots.extend_from_slice(pts);
    knots.push(bounds.hi);
    let hvals: Vec<f64> = knots.iter().map(|&x| h(x)).collect();
    if hvals.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("objective is not finite on the knots".into()));
    }

    // Variables: z_1..z_n, y_1..y_n, lambda+ , lambda-.
    let nv = 2 * n + 2;
    let mut objective = vec![0.0; nv];
    for i in 0..n {
        objective[i] = band.lower()[i];
        objective[n + i] = -band.upper()[i];
    }
    objective[2 * n] = 1.0;
    objective[2 * n + 1] = -1.0;

    // For each interval k = 1..n+1 two rows:
    //   sum_{i>=k} z_i - sum_{i>=k} y_i + lambda <= h(K_{k-1})
    //   sum_{i>=k} z_i - sum_{i>=k} y_i + lambda <= h(K_k)
    let mut rows = Vec::with_capacity(2 * (n + 1));
    for k in 1..=(n + 1) {
        let mut coeffs = vec![0.0; nv];
        for i in (k - 1)..n {
            coeffs[i] = 1.0;
            coeffs[n + i] = -1.0;
        }
        coeffs[2 * n] = 1.0;
        coeffs[2 * n + 1] = -1.0;
        rows.push(LpRow { coeffs: coeffs.clone(), rhs: hvals[k - 1], sense: RowCmp::Le });
        rows.push(LpRow { coeffs, rhs: hvals[k], sense: RowCmp::Le });
    }

    match simplex_lp::solve(&objective, &rows, LpSense::Maximize)? {
        LpStatus::Optimal { x, value } => {
            let z = x[0..n].to_vec();
            let y = x[n..2 * n].to_vec();
            let lambda = x[2 * n] - x[2 * n + 1];
            // Residuals and active intervals against the original rows.
            let mut dual_residual: f64 = 0.0;
            let mut active = Vec::new();
            for k in 1..=(n + 1) {
                let tail: f64 =
                    ((k - 1)..n).map(|i| z[i] - y[i]).sum::<f64>() + lambda;
                let slack_prev = hvals[k - 1] - tail;
                let slack_here = hvals[k] - tail;
                dual_residual = dual_residual.max(-slack_prev).max(-slack_here);
                let scale = 1.0 + hvals[k].abs().max(hvals[k - 1].abs());
                if slack_prev.min(slack_here) <= 1e-9 * scale {
                    active.push(k);
                }
            }
            for v in y.iter().chain(z.iter()) {
                dual_residual = dual_residual.max(-v);
            }
            Ok(BandRobustSolution {
                value,
                y,
                z,
                lambda,
                active_knots: active,
                dual_residual: dual_residual.max(0.0),
            })
        }
        LpStatus::Unbounded => Err(Error::EmptyBand { margin: f64::INFINITY }),
        LpStatus::Infeasible { .. } => Err(Error::NumericalFailure(
            "band LP cannot be infeasible (y = z = 0, lambda = min h is feasible)".into(),
        )),
    }
}

/// Scalar decision optimization with the band worst case as the inner value.
///
/// `problem.objective()` is the reward `h(x, xi)`, concave in `xi` for each
/// feasible `x` and concave in `x`; same search contracts as
/// [`crate::outer::optimize_scalar`].
pub fn band_optimize_scalar(
    problem: &DecisionProblem,
    band: &CdfBand,
    bounds: SupportBounds,
) -> Result<OuterResult<BandRobustSolution>> {
    let FeasibleSet::Interval { lo, hi, integer } = *problem.feasible_set() else {
        return Err(Error::UnsupportedFeasibleSet);
    };
    let eval = |x: f64| -> Result<BandRobustSolution> {
        band_worst_case(band, |xi| problem.objective().eval(&[x], &[xi]), bounds)
    };
    let (x, sol, iterations) = optimize_scalar_with(eval, lo, hi, integer)?;
    Ok(OuterResult { decision: vec![x], value: sol.value, inner: sol, iterations, gap: 0.0 })
}
