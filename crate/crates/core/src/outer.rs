//! Outer decision optimization against the inner worst case.
//!
//! The outer objective `g(x) = min_{p in D(gamma)} sum_i p_i h(x, xi_i)` is
//! concave in `x` whenever `h` is (a min of concave functions), so scalar
//! problems yield to golden-section search and simplex problems to projected
//! supergradient ascent — a supergradient of `g` at `x` is `sum_i p*_i xi_i`
//! for the worst-case `p*` at `x`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::inner::{worst_case_expectation, PayoffVector, WorstCaseSolution};
use crate::math;
use crate::problem::{DecisionProblem, FeasibleSet};
use crate::set::LikelihoodSet;

/// Result of an outer optimization. `inner` is the worst-case solution at
/// the returned decision; `value == inner value` by construction.
#[derive(Debug, Clone)]
pub struct OuterResult<I> {
    pub decision: Vec<f64>,
    pub value: f64,
    pub inner: I,
    pub iterations: usize,
    /// Upper bound on the optimality gap certified during the run (zero for
    /// exhaustive scans; the best dual bound minus the best value for
    /// supergradient ascent).
    pub gap: f64,
}

const GOLDEN_INV: f64 = 0.618_033_988_749_894_8;

/// Golden-section maximization of a unimodal function on `[lo, hi]` to an
/// argument tolerance of `rel_tol * (hi - lo)`.
pub(crate) fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if lo > hi {
        return Err(Error::IntervalEmpty);
    }
    if lo == hi {
        return Ok((lo, f(lo)?));
    }
    let tol = rel_tol * (hi - lo);
    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - GOLDEN_INV * (b - a);
    let mut x2 = a + GOLDEN_INV * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut iters = 0usize;
    while (b - a) > tol && iters < 200 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN_INV * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN_INV * (b - a);
            f1 = f(x1)?;
        }
        iters += 1;
    }
    let mid = 0.5 * (a + b);
    Ok((mid, f(mid)?))
}

/// Scalar outer optimization generic over the inner evaluator; shared by the
/// likelihood-set path and the CDF-band path.
///
/// Integer intervals are scanned exhaustively (the spans in this toolkit are
/// small); ties within `1e-9 * (1 + |best|)` are broken to the midpoint of
/// the optimal run, which makes flat optima (`b = h` newsvendor medians)
/// deterministic and symmetric.
pub(crate) fn optimize_scalar_with<F, I>(
    mut inner: F,
    lo: f64,
    hi: f64,
    integer: bool,
) -> Result<(f64, I, usize)>
where
    F: FnMut(f64) -> Result<I>,
    I: InnerValue,
{
    if lo > hi {
        return Err(Error::IntervalEmpty);
    }
    if integer {
        let start = libm::ceil(lo) as i64;
        let end = libm::floor(hi) as i64;
        if start > end {
            return Err(Error::IntervalEmpty);
        }
        let span = (end - start) as usize + 1;
        if span > 2_000_000 {
            return Err(Error::InvalidInput(
                "integer interval too large for exhaustive scan".into(),
            ));
        }
        let mut best: Option<(f64, I)> = None;
        let mut values = Vec::with_capacity(span);
        for k in start..=end {
            let x = k as f64;
            let sol = inner(x)?;
            let v = sol.value();
            values.push(v);
            if best.as_ref().map_or(true, |(bv, _)| v > *bv) {
                best = Some((v, sol));
            }
        }
        let (best_v, _) = best.as_ref().unwrap();
        let tie_tol = 1e-9 * (1.0 + best_v.abs());
        let ties: Vec<usize> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| (*best_v - **v) <= tie_tol)
            .map(|(i, _)| i)
            .collect();
        let pick = ties[(ties.len() - 1) / 2];
        let x = (start + pick as i64) as f64;
        let sol = inner(x)?;
        Ok((x, sol, span))
    } else {
        let mut evals = 0usize;
        let (x, _) = golden_section_max(
            |x| {
                evals += 1;
                inner(x).map(|s| s.value())
            },
            lo,
            hi,
            1e-4,
        )?;
        let sol = inner(x)?;
        Ok((x, sol, evals))
    }
}

pub(crate) trait InnerValue {
    fn value(&self) -> f64;
}

impl InnerValue for WorstCaseSolution {
    fn value(&self) -> f64 {
        self.value
    }
}

impl InnerValue for crate::band::BandRobustSolution {
    fn value(&self) -> f64 {
        self.value
    }
}

/// Maximize the worst-case expectation over a scalar interval.
///
/// `h` must be concave in `x` for each scenario so that `g` is concave
/// (hence unimodal). Integer intervals return the best integer decision.
pub fn optimize_scalar(
    problem: &DecisionProblem,
    set: &LikelihoodSet,
) -> Result<OuterResult<WorstCaseSolution>> {
    let FeasibleSet::Interval { lo, hi, integer } = *problem.feasible_set() else {
        return Err(Error::UnsupportedFeasibleSet);
    };
    let support = set.observations().support();
    let constrained = set.side_constraints().is_some();
    let eval = |x: f64| -> Result<WorstCaseSolution> {
        let payoffs = PayoffVector::new(
            support.iter().map(|xi| problem.objective().eval(&[x], xi)).collect(),
        )?;
        if constrained {
            crate::inner::worst_case_expectation_constrained(set, &payoffs)
        } else {
            worst_case_expectation(set, &payoffs)
        }
    };
    let (x, sol, iterations) = optimize_scalar_with(eval, lo, hi, integer)?;
    Ok(OuterResult { decision: vec![x], value: sol.value, inner: sol, iterations, gap: 0.0 })
}

/// Euclidean projection onto the unit simplex (sorted-threshold method).
///
/// The indices `k` with `u_(k) > (sum_{j<=k} u_(j) - 1)/k` (descending sort)
/// form a prefix; the threshold at the last such `k` is subtracted and the
/// result clipped at zero.
pub fn project_onto_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if u > t {
            theta = t;
        }
    }
    v.iter().map(|&u| (u - theta).max(0.0)).collect()
}

/// Inner evaluation used by the simplex ascent: worst-case value, a
/// supergradient, and a valid upper bound on `max_x g(x)`.
pub(crate) struct SimplexInnerEval {
    pub value: f64,
    pub supergradient: Vec<f64>,
    pub upper_bound: f64,
}

/// Projected supergradient ascent over the unit simplex, generic over the
/// inner evaluator, followed by a deterministic pairwise golden-section
/// polish that tightens flat-kink solutions to the certification tolerance.
pub(crate) fn optimize_simplex_with<F>(
    mut inner: F,
    dim: usize,
    x0: Option<Vec<f64>>,
) -> Result<(Vec<f64>, f64, usize, f64)>
where
    F: FnMut(&[f64]) -> Result<SimplexInnerEval>,
{
    let mut x = x0.unwrap_or_else(|| vec![1.0 / dim as f64; dim]);
    let first = inner(&x)?;
    let scale = first
        .supergradient
        .iter()
        .fold(0.0f64, |a, &v| a.max(v.abs()))
        .max(1e-12);
    let s0 = 1.0 / scale;
    let mut best_x = x.clone();
    let mut best_v = first.value;
    let mut best_ub = first.upper_bound;
    let mut iterations = 1usize;

    let max_iters = 5_000usize;
    let mut since_improvement = 0usize;
    for k in 1..=max_iters {
        let eval = inner(&x)?;
        iterations += 1;
        if eval.value > best_v + 1e-12 * (1.0 + best_v.abs()) {
            best_v = eval.value;
            best_x = x.clone();
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        if eval.upper_bound < best_ub {
            best_ub = eval.upper_bound;
        }
        if best_ub - best_v <= 1e-9 * (1.0 + best_v.abs()) {
            break;
        }
        // Plateau stop: the polish phase below does the precision work once
        // the ascent has stopped finding better iterates.
        if since_improvement >= 250 {
            break;
        }
        let step = s0 / math::sqrt(k as f64);
        let moved: Vec<f64> =
            x.iter().zip(&eval.supergradient).map(|(xi, gi)| xi + step * gi).collect();
        x = project_onto_simplex(&moved);
    }

    // Pairwise coordinate polish: golden-section along each (i, j) transfer
    // direction until a full sweep no longer improves. Deterministic and
    // exact enough for the 1e-3 grid-certification property.
    for _sweep in 0..50 {
        let mut improved = false;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let base = best_x.clone();
                let lo = -base[j];
                let hi = base[i];
                if hi - lo <= 1e-12 {
                    continue;
                }
                let mut try_at = |t: f64| -> Result<f64> {
                    let mut y = base.clone();
                    y[i] -= t;
                    y[j] += t;
                    Ok(inner(&y)?.value)
                };
                let (t, v) = golden_section_max(&mut try_at, lo, hi, 1e-6)?;
                iterations += 1;
                if v > best_v + 1e-12 * (1.0 + best_v.abs()) {
                    best_v = v;
                    best_x[i] -= t;
                    best_x[j] += t;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }

    let gap = (best_ub - best_v).max(0.0);
    Ok((best_x, best_v, iterations, gap))
}

/// Maximize `g(x) = min_p sum_i p_i xi_i . x` over the unit simplex.
///
/// The objective must be linear in `x` (`h(x, xi) = xi . x`); the upper
/// bound tracked for the gap report is `max_j E_{p*}[xi_j]`, valid because a
/// linear function on the simplex is maximized at a vertex.
pub fn optimize_simplex(
    problem: &DecisionProblem,
    set: &LikelihoodSet,
) -> Result<OuterResult<WorstCaseSolution>> {
    let FeasibleSet::Simplex { dim } = *problem.feasible_set() else {
        return Err(Error::UnsupportedFeasibleSet);
    };
    let support = set.observations().support();
    if set.observations().dim() != dim {
        return Err(Error::InvalidInput(
            "support dimension does not match the simplex dimension".into(),
        ));
    }
    let inner_eval = |x: &[f64]| -> Result<SimplexInnerEval> {
        let payoffs =
            PayoffVector::new(support.iter().map(|xi| dot(xi, x)).collect())?;
        let sol = worst_case_expectation(set, &payoffs)?;
        let mut supergradient = vec![0.0; dim];
        for (i, xi) in support.iter().enumerate() {
            for (j, g) in supergradient.iter_mut().enumerate() {
                *g += sol.distribution[i] * xi[j];
            }
        }
        let upper_bound =
            supergradient.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(SimplexInnerEval { value: sol.value, supergradient, upper_bound })
    };
    let (x, _value, iterations, gap) = optimize_simplex_with(inner_eval, dim, None)?;
    // Re-solve at the final decision for consistent certificates.
    let payoffs = PayoffVector::new(support.iter().map(|xi| dot(xi, &x)).collect())?;
    let sol = worst_case_expectation(set, &payoffs)?;
    Ok(OuterResult { decision: x, value: sol.value, inner: sol, iterations, gap })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obs::ObservationSet;
    use crate::problem::DecisionProblem;

    fn abs_cost_reward() -> DecisionProblem {
        // reward = -|x - d|, concave in x.
        DecisionProblem::new(
            alloc::boxed::Box::new(|x: &[f64], xi: &[f64]| -(x[0] - xi[0]).abs()),
            FeasibleSet::Interval { lo: 1.0, hi: 5.0, integer: true },
        )
        .unwrap()
    }

    #[test]
    fn single_scenario_optimum_is_the_observed_demand() {
        let obs =
            ObservationSet::from_scalar(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0, 0, 1, 0, 0]).unwrap();
        let gamma = crate::obs::max_log_likelihood(&obs);
        let set = LikelihoodSet::new(obs, gamma).unwrap();
        let res = optimize_scalar(&abs_cost_reward(), &set).unwrap();
        assert_eq!(res.decision[0], 3.0);
        assert!((res.value - 0.0).abs() < 1e-12);
    }

    #[test]
    fn flat_two_point_tie_breaks_to_the_midpoint() {
        let obs = ObservationSet::from_scalar(&[10.0, 20.0], &[1, 1]).unwrap();
        let gamma = crate::obs::max_log_likelihood(&obs);
        let set = LikelihoodSet::new(obs, gamma).unwrap();
        let problem = DecisionProblem::new(
            alloc::boxed::Box::new(|x: &[f64], xi: &[f64]| -(x[0] - xi[0]).abs()),
            FeasibleSet::Interval { lo: 10.0, hi: 20.0, integer: true },
        )
        .unwrap();
        let res = optimize_scalar(&problem, &set).unwrap();
        assert_eq!(res.decision[0], 15.0);
    }

    #[test]
    fn projection_handles_interior_and_vertices() {
        let p = project_onto_simplex(&[0.3, 0.3, 0.4]);
        for (a, b) in p.iter().zip([0.3, 0.3, 0.4]) {
            assert!((a - b).abs() < 1e-12);
        }
        let p = project_onto_simplex(&[5.0, 0.0]);
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);
        let p = project_onto_simplex(&[-1.0, -2.0, -3.0]);
        let sum: f64 = p.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn dominant_asset_takes_all_weight() {
        // Asset 1 beats asset 2 in every scenario.
        let obs = ObservationSet::new(
            alloc::vec![alloc::vec![0.05, 0.01], alloc::vec![0.03, 0.0]],
            alloc::vec![1, 1],
        )
        .unwrap();
        let set = LikelihoodSet::new(obs, -50.0).unwrap();
        let problem = DecisionProblem::new(
            alloc::boxed::Box::new(|x: &[f64], xi: &[f64]| dot(xi, x)),
            FeasibleSet::Simplex { dim: 2 },
        )
        .unwrap();
        let res = optimize_simplex(&problem, &set).unwrap();
        assert!(res.decision[0] > 0.999, "{:?}", res.decision);
    }

    #[test]
    fn matrix_game_saddle_point() {
        // Payoffs ((1,0),(0,1)), loose gamma: the game value is 1/2 at
        // x = (1/2, 1/2).
        let obs = ObservationSet::new(
            alloc::vec![alloc::vec![1.0, 0.0], alloc::vec![0.0, 1.0]],
            alloc::vec![1, 1],
        )
        .unwrap();
        let set = LikelihoodSet::new(obs, -1e6).unwrap();
        let problem = DecisionProblem::new(
            alloc::boxed::Box::new(|x: &[f64], xi: &[f64]| dot(xi, x)),
            FeasibleSet::Simplex { dim: 2 },
        )
        .unwrap();
        let res = optimize_simplex(&problem, &set).unwrap();
        assert!((res.value - 0.5).abs() <= 1e-3, "value {}", res.value);
        assert!((res.decision[0] - 0.5).abs() <= 5e-3, "{:?}", res.decision);
    }
}
