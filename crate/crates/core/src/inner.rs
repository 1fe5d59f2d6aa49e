//! Worst-case expectation over a likelihood set, with dual certificates.
//!
//! For a fixed decision the inner problem is
//!
//! ```text
//! minimize_p   sum_i p_i h_i
//! subject to   sum_i N_i ln(p_i) >= gamma,   sum_i p_i = 1,   p >= 0
//! ```
//!
//! whose Lagrangian dual is the two-variable concave program
//!
//! ```text
//! maximize_{lambda >= 0, mu}
//!     mu + lambda (gamma + N - sum N_i ln N_i) - N lambda ln lambda
//!        + lambda sum_i N_i ln(h_i - mu)
//! subject to h_i - mu >= 0 for all i.
//! ```
//!
//! For fixed `mu` the optimal `lambda` is available in closed form,
//!
//! ```text
//! lambda*(mu) = exp[(gamma + sum_i N_i ln((h_i - mu)/N_i)) / N],
//! ```
//!
//! which collapses the dual to the scalar concave `phi(mu) = mu + N
//! lambda*(mu)`. Its derivative is `1 - s(mu)` where `s(mu) = sum_i
//! lambda* N_i / (h_i - mu)` is the total recovered mass, so the optimizer
//! is the root of the monotone `s(mu) = 1` (interior case), or the boundary
//! `mu = min_i h_i` with the missing mass assigned to a payoff-minimizing
//! support point (or to the support cap for the portfolio variant). The
//! recovered distribution is the rational form `p_i = lambda* N_i / (h_i -
//! mu*)`, and the log-likelihood constraint is active by construction
//! whenever `lambda* > 0`.
//!
//! Side constraints `A p >= b` generalize `mu` to a multiplier vector with
//! `p_i = lambda* N_i / (h_i - a_i . mu)`; that dual is solved by a damped
//! Newton method with logarithmic barriers on dual feasibility (see
//! [`worst_case_expectation_constrained`]).
//!
//! All solves are deterministic: fixed initialization, fixed caps, no
//! randomness.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::outer::dot;
use crate::set::{validate_likelihood_set, LikelihoodSet, RowSense};
use crate::{FEAS_TOL, LIK_TOL};

/// Payoffs `h_i = h(x, xi_i)` aligned with a support.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffVector(Vec<f64>);

impl PayoffVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("payoff vector must be nonempty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("payoff vector entries must be finite".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Dual multiplier of the normalization/side-constraint block.
#[derive(Debug, Clone, PartialEq)]
pub enum DualMu {
    /// Plain likelihood set: the scalar multiplier of `sum p_i = 1`.
    Scalar(f64),
    /// With side constraints: one entry per row, the implicit `sum p_i = 1`
    /// row first, then the user rows in order.
    Vector(Vec<f64>),
}

impl DualMu {
    pub fn scalar(&self) -> Option<f64> {
        match self {
            DualMu::Scalar(v) => Some(*v),
            DualMu::Vector(_) => None,
        }
    }
}

/// Solution of the inner worst-case problem.
///
/// `distribution` is the worst-case `p*` over the support (sums to one
/// within [`FEAS_TOL`]); `value = sum_i p*_i h_i`; `lambda`/`mu` are the
/// dual certificates of the rational form above; `kkt_residual` is the
/// largest violation among primal feasibility, dual feasibility,
/// stationarity, complementary slackness, and the duality gap.
#[derive(Debug, Clone)]
pub struct WorstCaseSolution {
    pub value: f64,
    pub distribution: Vec<f64>,
    pub lambda: f64,
    pub mu: DualMu,
    pub kkt_residual: f64,
}

/// Worst case when part of the mass may sit on an out-of-support scenario
/// whose payoff is capped at `cap` (portfolio support constraint).
#[derive(Debug, Clone)]
pub struct CappedWorstCase {
    pub value: f64,
    /// Mass on each observed support point (sums to `1 - boundary_mass`).
    pub observed: Vec<f64>,
    /// Mass assigned to the cap-attaining scenario.
    pub boundary_mass: f64,
    pub lambda: f64,
    pub mu: f64,
}

/// Where the mass deficit of a boundary dual solution goes.
enum DeficitTarget {
    Support(usize),
    Cap,
}

struct ScalarSolve {
    mu: f64,
    lambda: f64,
    /// Mass per support point (formula part plus any support-point deficit).
    p: Vec<f64>,
    /// Mass on the cap scenario (zero unless a cap was given and binds).
    cap_mass: f64,
    value: f64,
    dual_value: f64,
}

fn observed<'a>(counts: &'a [u64]) -> impl Iterator<Item = (usize, f64)> + 'a {
    counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| (i, c as f64))
}

/// `ln lambda*(mu)`; `-inf` when some observed payoff equals `mu`.
fn log_lambda_star(counts: &[u64], h: &[f64], gamma: f64, mu: f64) -> f64 {
    let n_total: f64 = counts.iter().sum::<u64>() as f64;
    let mut acc = gamma;
    for (i, c) in observed(counts) {
        acc += c * math::ln((h[i] - mu) / c);
    }
    acc / n_total
}

/// Total recovered mass `s(mu) = lambda*(mu) sum_i N_i/(h_i - mu)`.
fn mass_at(counts: &[u64], h: &[f64], gamma: f64, mu: f64) -> f64 {
    let log_lambda = log_lambda_star(counts, h, gamma, mu);
    let denom_sum: f64 = observed(counts).map(|(i, c)| c / (h[i] - mu)).sum();
    math::exp(log_lambda + math::ln(denom_sum))
}

/// `ln s(mu)` and its derivative in `mu`; the derivative is positive, so
/// `ln s` is strictly increasing and Newton on `ln s = 0` is safe inside a
/// sign-changing bracket.
fn log_mass_and_deriv(counts: &[u64], h: &[f64], gamma: f64, mu: f64) -> (f64, f64) {
    let n_total: f64 = counts.iter().sum::<u64>() as f64;
    let mut log_lambda = gamma;
    let mut q = 0.0; // sum N_i / r_i
    let mut q2 = 0.0; // sum N_i / r_i^2
    for (i, c) in observed(counts) {
        let r = h[i] - mu;
        log_lambda += c * math::ln(r / c);
        q += c / r;
        q2 += c / (r * r);
    }
    log_lambda /= n_total;
    let log_s = log_lambda + math::ln(q);
    let deriv = q2 / q - q / n_total;
    (log_s, deriv)
}

fn solve_scalar_dual(
    set: &LikelihoodSet,
    h: &[f64],
    cap: Option<f64>,
) -> Result<ScalarSolve> {
    let obs = set.observations();
    let counts = obs.counts();
    let n = counts.len();
    if h.len() != n {
        return Err(Error::InvalidInput(format!(
            "payoff length {} != support length {n}",
            h.len()
        )));
    }
    let gamma = set.gamma();
    let gamma_max = set.max_log_likelihood();
    if gamma > gamma_max + LIK_TOL {
        return Err(Error::EmptySet { margin: gamma - gamma_max });
    }

    let n_total: f64 = obs.total() as f64;
    let h_min = h.iter().cloned().fold(f64::INFINITY, f64::min);
    let h_max = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mu_bound = match cap {
        Some(c) => c.min(h_min),
        None => h_min,
    };

    // Degenerate payoff: every distribution gives the same expectation.
    if h_min == h_max && cap.map_or(true, |c| c >= h_min) {
        let p = obs.mle();
        return Ok(ScalarSolve {
            mu: h_min,
            lambda: 0.0,
            p,
            cap_mass: 0.0,
            value: h_min,
            dual_value: h_min,
        });
    }

    // gamma at (or within roundoff of) its maximum: the set is the single
    // point p = MLE regardless of any cap (diverting mass away from the
    // observed points would drop the likelihood below its maximum). The
    // dual supremum is approached only as mu -> -inf, so the certificates
    // report lambda = 0 with a placeholder mu.
    let eps_gamma = 1e-12 * (1.0 + gamma_max.abs());
    if gamma >= gamma_max - eps_gamma {
        let p = obs.mle();
        let value: f64 = p.iter().zip(h).map(|(pi, hi)| pi * hi).sum();
        return Ok(ScalarSolve {
            mu: mu_bound - 1.0,
            lambda: 0.0,
            p,
            cap_mass: 0.0,
            value,
            dual_value: value,
        });
    }

    let eps_mu = 1e-12 * (1.0 + mu_bound.abs());
    let mu_hi = mu_bound - eps_mu;
    let s_hi = mass_at(counts, h, gamma, mu_hi);

    let (mu_star, boundary) = if s_hi < 1.0 {
        (mu_bound, true)
    } else {
        // Interior root of s(mu) = 1 on (-inf, mu_hi); s is nondecreasing
        // with limit exp((gamma - gamma_max)/N) < 1 at -inf, so an
        // expanding bracket terminates.
        let mut width = (h_max - h_min).max(1.0) + 1.0;
        let mut lo = mu_bound - width;
        while mass_at(counts, h, gamma, lo) >= 1.0 {
            width *= 4.0;
            lo = mu_bound - width;
            if width > 1e305 {
                return Err(Error::NumericalFailure(
                    "mu bracket expansion failed to cross s(mu) = 1".into(),
                ));
            }
        }
        // Safeguarded Newton on ln s(mu) = 0 inside the bracket [lo, mu_hi].
        let mut a = lo;
        let mut b = mu_hi;
        let mut mu = 0.5 * (a + b);
        for _ in 0..200 {
            let (log_s, deriv) = log_mass_and_deriv(counts, h, gamma, mu);
            if log_s >= 0.0 {
                b = mu;
            } else {
                a = mu;
            }
            if log_s.abs() <= 1e-13 {
                break;
            }
            let mut next = if deriv > 0.0 { mu - log_s / deriv } else { 0.5 * (a + b) };
            if !(a < next && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - mu).abs() <= 1e-16 * (1.0 + mu.abs()) {
                mu = next;
                break;
            }
            mu = next;
        }
        (mu, false)
    };

    let lambda = math::exp(log_lambda_star(counts, h, gamma, mu_star));
    let mut p = vec![0.0; n];
    for (i, c) in observed(counts) {
        let r = h[i] - mu_star;
        if r > 0.0 && lambda > 0.0 {
            p[i] = lambda * c / r;
        }
    }
    let mass: f64 = p.iter().sum();

    let mut cap_mass = 0.0;
    if boundary {
        // Deficit mass sits where the dual constraint h_i - mu >= 0 (or the
        // cap) is active: the first support point attaining mu_bound, else
        // the cap scenario.
        let deficit = (1.0 - mass).max(0.0);
        if deficit > 0.0 {
            let target = match h.iter().position(|&hi| hi <= mu_bound) {
                Some(i) => DeficitTarget::Support(i),
                None => DeficitTarget::Cap,
            };
            match target {
                DeficitTarget::Support(i) => p[i] += deficit,
                DeficitTarget::Cap => cap_mass = deficit,
            }
        }
    } else {
        // Interior: s(mu*) = 1 up to bisection tolerance; renormalize.
        let total = mass;
        if total > 0.0 {
            for pi in &mut p {
                *pi /= total;
            }
        }
    }

    let value: f64 =
        p.iter().zip(h).map(|(pi, hi)| pi * hi).sum::<f64>() + cap_mass * mu_star;
    let dual_value = mu_star + n_total * lambda;
    Ok(ScalarSolve { mu: mu_star, lambda, p, cap_mass, value, dual_value })
}

fn kkt_residual_scalar(set: &LikelihoodSet, h: &[f64], sol: &ScalarSolve) -> f64 {
    let obs = set.observations();
    let mut res: f64 = 0.0;
    let total_mass: f64 = sol.p.iter().sum::<f64>() + sol.cap_mass;
    res = res.max((total_mass - 1.0).abs());
    // Likelihood feasibility/activeness. Masses that underflowed to exact
    // zero on observed points (attainable only at extreme gamma, where the
    // true mass is below f64 resolution) are excluded from the sum.
    let mut loglik = 0.0;
    let mut underflow = false;
    for (i, c) in observed(obs.counts()) {
        if sol.p[i] > 0.0 {
            loglik += c * math::ln(sol.p[i]);
        } else {
            underflow = true;
        }
    }
    if !underflow {
        if sol.lambda > 0.0 {
            res = res.max((loglik - set.gamma()).abs());
        } else {
            res = res.max((set.gamma() - loglik).max(0.0));
        }
    }
    if sol.lambda > 0.0 {
        // Dual feasibility and the duality gap only certify interior or
        // boundary solves; the lambda = 0 shortcuts are primal-exact.
        let h_min = h.iter().cloned().fold(f64::INFINITY, f64::min);
        res = res.max(sol.mu - h_min);
        res = res.max((sol.dual_value - sol.value).abs());
    }
    res
}

/// Worst-case expectation `min { sum p_i h_i : p in D(gamma) }` with the
/// recovered worst-case distribution and dual certificates.
pub fn worst_case_expectation(
    set: &LikelihoodSet,
    payoffs: &PayoffVector,
) -> Result<WorstCaseSolution> {
    if set.side_constraints().is_some() {
        return Err(Error::InvalidInput(
            "set has side constraints; use worst_case_expectation_constrained".into(),
        ));
    }
    let sol = solve_scalar_dual(set, payoffs.values(), None)?;
    let kkt = kkt_residual_scalar(set, payoffs.values(), &sol);
    Ok(WorstCaseSolution {
        value: sol.value,
        distribution: sol.p,
        lambda: sol.lambda,
        mu: DualMu::Scalar(sol.mu),
        kkt_residual: kkt,
    })
}

/// Worst-case expectation when the adversary may also place mass on an
/// unobserved scenario with payoff floor `cap` (the reduced support
/// constraint `mu <= cap` of the portfolio model).
pub fn worst_case_expectation_capped(
    set: &LikelihoodSet,
    payoffs: &PayoffVector,
    cap: f64,
) -> Result<CappedWorstCase> {
    if set.side_constraints().is_some() {
        return Err(Error::InvalidInput(
            "capped solve does not accept side constraints".into(),
        ));
    }
    if !cap.is_finite() {
        return Err(Error::InvalidInput("cap must be finite".into()));
    }
    let sol = solve_scalar_dual(set, payoffs.values(), Some(cap))?;
    Ok(CappedWorstCase {
        value: sol.value,
        observed: sol.p,
        boundary_mass: sol.cap_mass,
        lambda: sol.lambda,
        mu: sol.mu,
    })
}

/// Printed dual objective of the plain inner problem at `(lambda, mu)`;
/// equals the primal optimum at the optimal multipliers (strong duality).
pub fn dual_objective(set: &LikelihoodSet, payoffs: &PayoffVector, lambda: f64, mu: f64) -> f64 {
    let obs = set.observations();
    let h = payoffs.values();
    if lambda == 0.0 {
        return mu;
    }
    let n_total: f64 = obs.total() as f64;
    let mut acc = mu + lambda * (set.gamma() + n_total);
    acc -= n_total * lambda * math::ln(lambda);
    for (i, c) in observed(obs.counts()) {
        let r = h[i] - mu;
        if r <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += lambda * c * (math::ln(r) - math::ln(c));
    }
    acc
}

// ---------------------------------------------------------------------------
// Side-constrained inner problem (A p >= b rows plus the simplex equality).
// ---------------------------------------------------------------------------

struct ConstraintSystem {
    /// Row-major coefficients, simplex row first.
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    /// `true` for inequality rows (nonnegative multiplier).
    is_ge: Vec<bool>,
    /// Per-row normalization divisor applied to `rows`/`rhs` (1 when built
    /// unnormalized); original-unit multipliers are `mu_internal / scale`.
    scale: Vec<f64>,
}

fn build_system(set: &LikelihoodSet, normalize: bool) -> ConstraintSystem {
    let n = set.observations().len();
    let cons = set.side_constraints().expect("constrained solve requires side constraints");
    let mut rows = vec![vec![1.0; n]];
    let mut rhs = vec![1.0];
    let mut is_ge = vec![false];
    let mut scale = vec![1.0];
    for row in cons.rows() {
        let s = if normalize {
            row.coeffs.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1e-300)
        } else {
            1.0
        };
        rows.push(row.coeffs.iter().map(|&c| c / s).collect());
        rhs.push(row.rhs / s);
        is_ge.push(row.sense == RowSense::Ge);
        scale.push(s);
    }
    ConstraintSystem { rows, rhs, is_ge, scale }
}

impl ConstraintSystem {
    fn m(&self) -> usize {
        self.rows.len()
    }

    /// `r_i = h_i - a_i . mu` for every support point.
    fn residuals(&self, h: &[f64], mu: &[f64], out: &mut [f64]) {
        for i in 0..h.len() {
            let mut dot = 0.0;
            for (k, row) in self.rows.iter().enumerate() {
                dot += mu[k] * row[i];
            }
            out[i] = h[i] - dot;
        }
    }
}

/// Solve a small symmetric negative-definite system `(-H) d = g` in place
/// via Gaussian elimination with partial pivoting. Returns `None` when the
/// matrix is numerically singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut g: Vec<f64>) -> Option<Vec<f64>> {
    let m = g.len();
    for col in 0..m {
        let mut piv = col;
        for r in (col + 1)..m {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        g.swap(col, piv);
        for r in (col + 1)..m {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..m {
                    a[r][c] -= f * a[col][c];
                }
                g[r] -= f * g[col];
            }
        }
    }
    for col in (0..m).rev() {
        let mut acc = g[col];
        for c in (col + 1)..m {
            acc -= a[col][c] * g[c];
        }
        g[col] = acc / a[col][col];
    }
    Some(g)
}

/// Worst-case expectation over `D(gamma)` intersected with the side
/// constraints of the set.
///
/// The dual is `maximize b.mu + N lambda*(mu)` over multipliers `mu`
/// (simplex row free, `Ge` rows nonnegative) subject to dual feasibility
/// `h_i - a_i . mu >= 0`. The payoff is first split as `h = R_eq' beta +
/// h_red` against the equality rows: on the feasible set the row-space part
/// contributes the fixed amount `beta . b_eq`, so the iteration runs on the
/// reduced payoff (well conditioned even when a decision makes the cost
/// nearly linear in the constrained moments), and a vanishing reduced
/// payoff means the expectation is pinned by the constraints outright.
///
/// The reduced dual is solved by damped Newton with logarithmic barriers on
/// the nonnegative multipliers and on the dual-feasibility residuals of
/// zero-count support points, over a fixed decreasing barrier schedule; the
/// barrier multiplier estimates recover the worst-case mass on zero-count
/// points.
///
/// One optimum family is not attainable in this dual: when the constraints
/// pin some zero-count point's mass at exactly zero while the likelihood
/// constraint stays slack, `lambda -> 0` along a recession direction and
/// the Newton iteration stalls. That case is recovered exactly by dropping
/// subsets of zero-count points and re-solving on the reduced support; a
/// dropped point is certified optimal at zero mass by dual feasibility of
/// its column (`h_z - a_z . mu* >= 0`).
pub fn worst_case_expectation_constrained(
    set: &LikelihoodSet,
    payoffs: &PayoffVector,
) -> Result<WorstCaseSolution> {
    match constrained_attempt(set, payoffs) {
        Err(Error::NumericalFailure(_)) => constrained_zero_support_fallback(set, payoffs),
        other => other,
    }
}

/// Most-interior feasible distribution: maximize `t` subject to the rows,
/// `p_i >= t` on observed points, and `p >= 0`; used to certify pinned
/// (constraint-determined) expectations when the empirical distribution is
/// infeasible.
fn max_interior_point(sys: &ConstraintSystem, counts: &[u64]) -> Option<Vec<f64>> {
    use crate::simplex_lp::{self, LpRow, LpSense, LpStatus, RowCmp};
    let n = counts.len();
    let nv = n + 1; // p plus the interiority level t
    let mut rows = Vec::with_capacity(sys.m() + n);
    for k in 0..sys.m() {
        let mut coeffs = vec![0.0; nv];
        coeffs[..n].copy_from_slice(&sys.rows[k]);
        rows.push(LpRow {
            coeffs,
            rhs: sys.rhs[k],
            sense: if sys.is_ge[k] { RowCmp::Ge } else { RowCmp::Eq },
        });
    }
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 {
            let mut coeffs = vec![0.0; nv];
            coeffs[i] = 1.0;
            coeffs[n] = -1.0;
            rows.push(LpRow { coeffs, rhs: 0.0, sense: RowCmp::Ge });
        }
    }
    let mut objective = vec![0.0; nv];
    objective[n] = 1.0;
    match simplex_lp::solve(&objective, &rows, LpSense::Maximize) {
        Ok(LpStatus::Optimal { x, .. }) => Some(x[..n].to_vec()),
        _ => None,
    }
}

/// Re-solve with zero-count support subsets removed until the dual is
/// attained and every dropped column is dual-feasible at the optimum.
fn constrained_zero_support_fallback(
    set: &LikelihoodSet,
    payoffs: &PayoffVector,
) -> Result<WorstCaseSolution> {
    let obs = set.observations();
    let n = obs.len();
    let h = payoffs.values();
    let zero_idx: Vec<usize> =
        (0..n).filter(|&i| obs.counts()[i] == 0).collect();
    if zero_idx.is_empty() || zero_idx.len() > 6 {
        return Err(Error::NumericalFailure(
            "constrained dual stalled and the zero-count support is too large              to enumerate"
                .into(),
        ));
    }
    let scale = 1.0 + h.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let full_sys = build_system(set, false);
    // Subsets by increasing size, then lexicographic: deterministic.
    let mut masks: Vec<u32> = (1u32..(1 << zero_idx.len())).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    for mask in masks {
        let dropped: Vec<usize> = zero_idx
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask >> bit & 1 == 1)
            .map(|(_, &i)| i)
            .collect();
        let keep: Vec<usize> = (0..n).filter(|i| !dropped.contains(i)).collect();
        let support: Vec<alloc::vec::Vec<f64>> =
            keep.iter().map(|&i| obs.support()[i].clone()).collect();
        let counts: Vec<u64> = keep.iter().map(|&i| obs.counts()[i]).collect();
        let Ok(reduced_obs) = crate::obs::ObservationSet::new(support, counts) else {
            continue;
        };
        let rows: Vec<crate::set::ConstraintRow> = set
            .side_constraints()
            .unwrap()
            .rows()
            .iter()
            .map(|row| crate::set::ConstraintRow {
                coeffs: keep.iter().map(|&i| row.coeffs[i]).collect(),
                rhs: row.rhs,
                sense: row.sense,
            })
            .collect();
        let Ok(cons) = crate::set::LinearConstraints::new(rows) else { continue };
        let Ok(reduced_set) =
            LikelihoodSet::with_constraints(reduced_obs, set.gamma(), cons)
        else {
            continue;
        };
        let reduced_h: Vec<f64> = keep.iter().map(|&i| h[i]).collect();
        let Ok(reduced_payoffs) = PayoffVector::new(reduced_h) else { continue };
        let Ok(sol) = constrained_attempt(&reduced_set, &reduced_payoffs) else {
            continue;
        };
        // Dual feasibility of the dropped columns certifies zero mass there.
        let DualMu::Vector(mu) = &sol.mu else { continue };
        let dual_ok = dropped.iter().all(|&z| {
            let mut a_dot = 0.0;
            for (k, row) in full_sys.rows.iter().enumerate() {
                a_dot += mu[k] * row[z];
            }
            h[z] - a_dot >= -1e-7 * scale
        });
        if !dual_ok {
            continue;
        }
        let mut p = vec![0.0; n];
        for (slot, &i) in keep.iter().enumerate() {
            p[i] = sol.distribution[slot];
        }
        return Ok(WorstCaseSolution {
            value: sol.value,
            distribution: p,
            lambda: sol.lambda,
            mu: sol.mu,
            kkt_residual: sol.kkt_residual,
        });
    }
    Err(Error::NumericalFailure(
        "constrained dual stalled; no zero-count support subset certified".into(),
    ))
}

fn constrained_attempt(
    set: &LikelihoodSet,
    payoffs: &PayoffVector,
) -> Result<WorstCaseSolution> {
    let obs = set.observations();
    let n = obs.len();
    let h = payoffs.values();
    if h.len() != n {
        return Err(Error::InvalidInput(format!(
            "payoff length {} != support length {n}",
            h.len()
        )));
    }
    if set.side_constraints().is_none() {
        return Err(Error::InvalidInput(
            "set has no side constraints; use worst_case_expectation".into(),
        ));
    }
    validate_likelihood_set(set).into_result()?;

    let sys = build_system(set, true);
    let m = sys.m();
    let counts = obs.counts();
    let n_total: f64 = obs.total() as f64;
    let gamma = set.gamma();
    let h_scale = 1.0 + h.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let zero_idx: Vec<usize> = (0..n).filter(|&i| counts[i] == 0).collect();

    // Least-squares coefficients of h on the equality rows.
    let eq_rows: Vec<usize> = (0..m).filter(|&k| !sys.is_ge[k]).collect();
    let me = eq_rows.len();
    let mut gram = vec![vec![0.0; me]; me];
    let mut rh = vec![0.0; me];
    for (a_idx, &ka) in eq_rows.iter().enumerate() {
        for (b_idx, &kb) in eq_rows.iter().enumerate() {
            gram[a_idx][b_idx] = dot(&sys.rows[ka], &sys.rows[kb]);
        }
        gram[a_idx][a_idx] *= 1.0 + 1e-12;
        rh[a_idx] = dot(&sys.rows[ka], h);
    }
    let beta = solve_dense(gram, rh).ok_or_else(|| {
        Error::NumericalFailure("equality rows are numerically dependent".into())
    })?;
    let mut beta_full = vec![0.0; m];
    for (a_idx, &k) in eq_rows.iter().enumerate() {
        beta_full[k] = beta[a_idx];
    }
    let mut h_red = h.to_vec();
    for i in 0..n {
        for (a_idx, &k) in eq_rows.iter().enumerate() {
            h_red[i] -= beta[a_idx] * sys.rows[k][i];
        }
    }
    let red_max_abs = h_red.iter().fold(0.0f64, |a, &v| a.max(v.abs()));

    // Degenerate payoff: h lies in the span of the equality rows, so every
    // feasible distribution yields the same expectation. Report the
    // empirical distribution when it is feasible (it always is for
    // sample-moment constraints); anything else is outside this solver's
    // contract.
    if red_max_abs <= 1e-9 * h_scale {
        let mle = obs.mle();
        let mut feas: f64 = 0.0;
        for k in 0..m {
            let ap = dot(&sys.rows[k], &mle);
            let resid = ap - sys.rhs[k];
            feas = feas.max(if sys.is_ge[k] { (-resid).max(0.0) } else { resid.abs() });
        }
        let p_pinned = if feas <= FEAS_TOL {
            Some(mle)
        } else {
            // The empirical distribution misses the rows (possible on
            // reduced supports); fall back to the most-interior feasible
            // point, valid whenever it keeps the likelihood above gamma.
            max_interior_point(&sys, counts).filter(|p| {
                let loglik: f64 =
                    observed(counts).map(|(i, c)| c * math::ln(p[i].max(1e-300))).sum();
                loglik >= gamma - LIK_TOL
            })
        };
        let Some(p_pinned) = p_pinned else {
            return Err(Error::NumericalFailure(
                "payoff is pinned by the constraints but no feasible \
                 distribution with admissible likelihood was found"
                    .into(),
            ));
        };
        let mut kkt: f64 = 0.0;
        for k in 0..m {
            let resid = dot(&sys.rows[k], &p_pinned) - sys.rhs[k];
            kkt = kkt.max(if sys.is_ge[k] { (-resid).max(0.0) } else { resid.abs() });
        }
        let value = dot(&p_pinned, h);
        let mu_report: Vec<f64> =
            beta_full.iter().zip(&sys.scale).map(|(b, s)| b / s).collect();
        return Ok(WorstCaseSolution {
            value,
            distribution: p_pinned,
            lambda: 0.0,
            mu: DualMu::Vector(mu_report),
            kkt_residual: kkt,
        });
    }

    let hr_scale = 1.0 + red_max_abs;
    let hr_max = h_red.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let hr_min = h_red.iter().cloned().fold(f64::INFINITY, f64::min);

    // Interior start in reduced coordinates: simplex multiplier below the
    // reduced minimum, user multipliers at zero (Eq) or slightly interior
    // (Ge).
    let mut mu = vec![0.0; m];
    mu[0] = hr_min - (hr_max - hr_min).max(1.0);
    for k in 1..m {
        if sys.is_ge[k] {
            mu[k] = 1e-3;
        }
    }

    let mut r = vec![0.0; n];
    let mut p = vec![0.0; n];

    // Smooth barrier objective on the reduced payoff.
    let eval = |mu: &[f64], tau: f64, r: &mut [f64]| -> Option<f64> {
        sys.residuals(&h_red, mu, r);
        for (i, _) in observed(counts) {
            if r[i] <= 0.0 {
                return None;
            }
        }
        for &z in &zero_idx {
            if r[z] <= 0.0 {
                return None;
            }
        }
        let mut log_lambda = gamma;
        for (i, c) in observed(counts) {
            log_lambda += c * math::ln(r[i] / c);
        }
        log_lambda /= n_total;
        let mut val = n_total * math::exp(log_lambda);
        for k in 0..m {
            val += sys.rhs[k] * mu[k];
            if sys.is_ge[k] {
                if mu[k] <= 0.0 {
                    return None;
                }
                val += tau * math::ln(mu[k]);
            }
        }
        for &z in &zero_idx {
            val += tau * math::ln(r[z]);
        }
        Some(val)
    };

    let taus = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12];
    let mut lambda;
    for &tau_rel in &taus {
        let tau = tau_rel * hr_scale;
        for _ in 0..80 {
            sys.residuals(&h_red, &mu, &mut r);
            let mut log_lambda = gamma;
            for (i, c) in observed(counts) {
                log_lambda += c * math::ln(r[i] / c);
            }
            log_lambda /= n_total;
            lambda = math::exp(log_lambda);
            for i in 0..n {
                p[i] = if counts[i] > 0 { lambda * counts[i] as f64 / r[i] } else { 0.0 };
            }
            // Gradient: b_k - (A p)_k - tau sum_z a_zk / r_z + tau/mu_Ge.
            let mut grad = vec![0.0; m];
            for k in 0..m {
                let mut g = sys.rhs[k] - dot(&sys.rows[k], &p);
                for &z in &zero_idx {
                    g -= tau * sys.rows[k][z] / r[z];
                }
                if sys.is_ge[k] {
                    g += tau / mu[k];
                }
                grad[k] = g;
            }
            let gnorm = grad.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            if gnorm <= 0.1 * tau.max(1e-13 * hr_scale) {
                break;
            }
            // Negated Hessian (positive definite):
            //   lambda (S - q q^T / N) + tau sum_z a_z a_z^T / r_z^2
            //   + tau diag_Ge(1/mu^2)
            // with S = sum_obs N_i a_i a_i^T / r_i^2, q = sum_obs N_i a_i / r_i.
            let mut q = vec![0.0; m];
            for (i, c) in observed(counts) {
                for k in 0..m {
                    q[k] += c * sys.rows[k][i] / r[i];
                }
            }
            let mut neg_h = vec![vec![0.0; m]; m];
            for (i, c) in observed(counts) {
                let w = lambda * c / (r[i] * r[i]);
                for k in 0..m {
                    let aki = sys.rows[k][i];
                    if aki == 0.0 {
                        continue;
                    }
                    for l in 0..m {
                        neg_h[k][l] += w * aki * sys.rows[l][i];
                    }
                }
            }
            for k in 0..m {
                for l in 0..m {
                    neg_h[k][l] -= lambda * q[k] * q[l] / n_total;
                }
            }
            for &z in &zero_idx {
                let w = tau / (r[z] * r[z]);
                for k in 0..m {
                    let akz = sys.rows[k][z];
                    if akz == 0.0 {
                        continue;
                    }
                    for l in 0..m {
                        neg_h[k][l] += w * akz * sys.rows[l][z];
                    }
                }
            }
            for k in 0..m {
                if sys.is_ge[k] {
                    neg_h[k][k] += tau / (mu[k] * mu[k]);
                }
                neg_h[k][k] += 1e-13 * hr_scale; // ridge for degenerate rows
            }
            let Some(dir) = solve_dense(neg_h, grad.clone()) else {
                return Err(Error::NumericalFailure(
                    "constrained dual Newton system is singular".into(),
                ));
            };
            // Fraction-to-boundary step limit, then Armijo backtracking.
            let mut step: f64 = 1.0;
            for i in 0..n {
                if counts[i] == 0 && zero_idx.is_empty() {
                    continue;
                }
                let mut adot = 0.0;
                for k in 0..m {
                    adot += dir[k] * sys.rows[k][i];
                }
                if adot > 0.0 {
                    step = step.min(0.99 * r[i] / adot);
                }
            }
            for k in 0..m {
                if sys.is_ge[k] && dir[k] < 0.0 {
                    step = step.min(0.99 * mu[k] / (-dir[k]));
                }
            }
            let base = match eval(&mu, tau, &mut r) {
                Some(v) => v,
                None => {
                    return Err(Error::NumericalFailure(
                        "constrained dual iterate left the barrier domain".into(),
                    ))
                }
            };
            let gdot: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = mu.iter().zip(&dir).map(|(v, d)| v + step * d).collect();
                if let Some(val) = eval(&trial, tau, &mut r) {
                    if val >= base + 1e-4 * step * gdot {
                        mu = trial;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                break; // stalled at this barrier weight; tighten tau
            }
            // Dual values never exceed the primal minimum, which is at most
            // max h_red on a feasible instance; larger certifies emptiness.
            let dual_now = match eval(&mu, 0.0, &mut r) {
                Some(v) => v,
                None => break,
            };
            if dual_now > hr_max + hr_scale {
                return Err(Error::EmptySet { margin: dual_now - hr_max });
            }
        }
    }

    // Assemble the primal point: rational masses on observed points plus
    // barrier multiplier estimates on zero-count points.
    sys.residuals(&h_red, &mu, &mut r);
    let mut log_lambda = gamma;
    for (i, c) in observed(counts) {
        log_lambda += c * math::ln(r[i] / c);
    }
    lambda = math::exp(log_lambda / n_total);
    let tau_final = taus[taus.len() - 1] * hr_scale;
    for i in 0..n {
        p[i] = if counts[i] > 0 {
            lambda * counts[i] as f64 / r[i]
        } else {
            tau_final / r[i]
        };
    }
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        for pi in &mut p {
            *pi /= total;
        }
    }
    let value: f64 = dot(&p, h);

    // Report multipliers for the original payoff and original row units:
    // r_i = h_i - a_i . mu_full with the caller's coefficient rows.
    let mu_full: Vec<f64> = mu
        .iter()
        .zip(&beta_full)
        .zip(&sys.scale)
        .map(|((a, b), s)| (a + b) / s)
        .collect();

    // KKT residual over the true (unperturbed) conditions; feasibility and
    // complementarity are measured on the normalized rows so tolerances are
    // comparable across constraint scales.
    let mut kkt: f64 = (total - 1.0).abs(); // pre-normalization drift
    for k in 0..m {
        let resid = dot(&sys.rows[k], &p) - sys.rhs[k];
        if sys.is_ge[k] {
            kkt = kkt.max((-resid).max(0.0));
            kkt = kkt.max(((mu[k] + beta_full[k]) * resid).abs());
        } else {
            kkt = kkt.max(resid.abs());
        }
    }
    let loglik: f64 = observed(counts).map(|(i, c)| c * math::ln(p[i])).sum();
    kkt = kkt.max((loglik - gamma).abs());
    let mut min_r = f64::INFINITY;
    for i in 0..n {
        min_r = min_r.min(r[i]);
    }
    kkt = kkt.max(-min_r.min(0.0));
    let dual_val: f64 = (0..m)
        .map(|k| sys.rhs[k] * (mu[k] + beta_full[k]))
        .sum::<f64>()
        + n_total * lambda;
    kkt = kkt.max((dual_val - value).abs());

    if kkt > 1e-4 * h_scale {
        return Err(Error::NumericalFailure(format!(
            "constrained dual solve stalled with KKT residual {kkt:e}"
        )));
    }

    Ok(WorstCaseSolution {
        value,
        distribution: p,
        lambda,
        mu: DualMu::Vector(mu_full),
        kkt_residual: kkt,
    })
}

/// Dual objective of the constrained problem at `(lambda, mu)` with the
/// simplex row folded in as the first entry of `mu`.
pub fn dual_objective_constrained(
    set: &LikelihoodSet,
    payoffs: &PayoffVector,
    lambda: f64,
    mu: &[f64],
) -> f64 {
    let sys = build_system(set, false);
    let obs = set.observations();
    let n_total: f64 = obs.total() as f64;
    let h = payoffs.values();
    let mut r = vec![0.0; h.len()];
    sys.residuals(h, mu, &mut r);
    let mut acc: f64 = (0..sys.m()).map(|k| sys.rhs[k] * mu[k]).sum();
    if lambda == 0.0 {
        return acc;
    }
    acc += lambda * (set.gamma() + n_total) - n_total * lambda * math::ln(lambda);
    for (i, c) in observed(obs.counts()) {
        if r[i] <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += lambda * c * (math::ln(r[i]) - math::ln(c));
    }
    acc
}
