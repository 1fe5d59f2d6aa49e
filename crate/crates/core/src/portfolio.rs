//! Portfolio selection under likelihood robustness.
//!
//! Observed daily return rows are the support (each profile once, counts
//! merged if data repeats); the adversary may also place mass on unobserved
//! return profiles inside a declared support `Omega`, which enters the dual
//! as the single cap `mu <= min_{xi in Omega} xi . x`: for a box support
//! this is `lower_bounds . x`, for a ball `center . x - radius ||x||`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::inner::{worst_case_expectation_capped, CappedWorstCase, PayoffVector};
use crate::math;
use crate::obs::ObservationSet;
use crate::outer::{dot, optimize_simplex_with, OuterResult, SimplexInnerEval};
use crate::set::LikelihoodSet;

/// Declared support of unobserved return profiles.
#[derive(Debug, Clone, PartialEq)]
pub enum SupportModel {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl SupportModel {
    pub fn dim(&self) -> usize {
        match self {
            SupportModel::Box { lo, .. } => lo.len(),
            SupportModel::Ball { center, .. } => center.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SupportModel::Box { lo, hi } => {
                if lo.len() != hi.len() || lo.is_empty() {
                    return Err(Error::InvalidInput("box bounds must be nonempty, same length".into()));
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
                    return Err(Error::InvalidInput("box bounds must be finite with lo <= hi".into()));
                }
            }
            SupportModel::Ball { center, radius } => {
                if center.is_empty() || !radius.is_finite() || *radius < 0.0 {
                    return Err(Error::InvalidInput("ball needs a center and radius >= 0".into()));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, row: &[f64]) -> bool {
        match self {
            SupportModel::Box { lo, hi } => {
                row.iter().zip(lo.iter().zip(hi)).all(|(&r, (&l, &h))| l <= r && r <= h)
            }
            SupportModel::Ball { center, radius } => {
                let d2: f64 =
                    row.iter().zip(center).map(|(&r, &c)| (r - c) * (r - c)).sum();
                math::sqrt(d2) <= *radius + 1e-12
            }
        }
    }

    /// `min_{xi in Omega} xi . x` for simplex weights `x >= 0`.
    pub fn payoff_cap(&self, x: &[f64]) -> f64 {
        match self {
            SupportModel::Box { lo, .. } => dot(lo, x),
            SupportModel::Ball { center, radius } => {
                dot(center, x) - radius * math::sqrt(dot(x, x))
            }
        }
    }

    /// The scenario attaining the cap (the adversary's unobserved profile).
    pub fn cap_scenario(&self, x: &[f64]) -> Vec<f64> {
        match self {
            SupportModel::Box { lo, .. } => lo.clone(),
            SupportModel::Ball { center, radius } => {
                let norm = math::sqrt(dot(x, x));
                if norm == 0.0 {
                    return center.clone();
                }
                center.iter().zip(x).map(|(&c, &xi)| c - radius * xi / norm).collect()
            }
        }
    }

    /// Componentwise min/max of the data widened by `widen` times the range
    /// on each side (the documented default when no explicit bounds are
    /// supplied).
    pub fn box_from_data(rows: &[Vec<f64>], widen: f64) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("no rows".into()));
        }
        let d = rows[0].len();
        let mut lo = rows[0].clone();
        let mut hi = rows[0].clone();
        for row in rows {
            for j in 0..d {
                lo[j] = lo[j].min(row[j]);
                hi[j] = hi[j].max(row[j]);
            }
        }
        for j in 0..d {
            let range = hi[j] - lo[j];
            lo[j] -= widen * range;
            hi[j] += widen * range;
        }
        Ok(SupportModel::Box { lo, hi })
    }
}

/// A portfolio problem: observed return rows, declared support, threshold.
#[derive(Debug, Clone)]
pub struct PortfolioInstance {
    observations: ObservationSet,
    support_model: SupportModel,
    gamma: f64,
}

impl PortfolioInstance {
    /// Duplicate return rows are merged into counts; the likelihood terms
    /// are identical to treating each occurrence as its own profile.
    pub fn new(returns: &[Vec<f64>], support_model: SupportModel, gamma: f64) -> Result<Self> {
        if returns.is_empty() {
            return Err(Error::InvalidInput("need at least one return row".into()));
        }
        support_model.validate()?;
        let d = support_model.dim();
        for (t, row) in returns.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidInput(format!(
                    "return row {t} has {} assets, support model has {d}",
                    row.len()
                )));
            }
            if !support_model.contains(row) {
                return Err(Error::InvalidInput(format!(
                    "return row {t} lies outside the declared support"
                )));
            }
        }
        let mut uniq: Vec<Vec<f64>> = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for row in returns {
            match uniq.iter().position(|u| u == row) {
                Some(k) => counts[k] += 1,
                None => {
                    uniq.push(row.clone());
                    counts.push(1);
                }
            }
        }
        let observations = ObservationSet::new(uniq, counts)?;
        Ok(Self { observations, support_model, gamma })
    }

    pub fn observations(&self) -> &ObservationSet {
        &self.observations
    }

    pub fn support_model(&self) -> &SupportModel {
        &self.support_model
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn assets(&self) -> usize {
        self.support_model.dim()
    }
}

/// Maximize the worst-case expected return over the unit simplex.
pub fn portfolio_lro(inst: &PortfolioInstance) -> Result<OuterResult<CappedWorstCase>> {
    let d = inst.assets();
    let set = LikelihoodSet::new(inst.observations.clone(), inst.gamma)?;
    let support = inst.observations.support();
    let solve_at = |x: &[f64]| -> Result<CappedWorstCase> {
        let payoffs = PayoffVector::new(support.iter().map(|xi| dot(xi, x)).collect())?;
        worst_case_expectation_capped(&set, &payoffs, inst.support_model.payoff_cap(x))
    };
    let inner_eval = |x: &[f64]| -> Result<SimplexInnerEval> {
        let sol = solve_at(x)?;
        let mut supergradient = alloc::vec![0.0; d];
        for (i, xi) in support.iter().enumerate() {
            for (j, g) in supergradient.iter_mut().enumerate() {
                *g += sol.observed[i] * xi[j];
            }
        }
        if sol.boundary_mass > 0.0 {
            let scenario = inst.support_model.cap_scenario(x);
            for (j, g) in supergradient.iter_mut().enumerate() {
                *g += sol.boundary_mass * scenario[j];
            }
        }
        let upper_bound = supergradient.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(SimplexInnerEval { value: sol.value, supergradient, upper_bound })
    };
    let (x, _value, iterations, gap) = optimize_simplex_with(inner_eval, d, None)?;
    let sol = solve_at(&x)?;
    let value = sol.value;
    Ok(OuterResult { decision: x, value, inner: sol, iterations, gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn one_asset_takes_full_weight() {
        let rows = vec![vec![0.01], vec![0.02], vec![-0.01]];
        let sm = SupportModel::box_from_data(&rows, 0.5).unwrap();
        let inst = PortfolioInstance::new(&rows, sm, -20.0).unwrap();
        let res = portfolio_lro(&inst).unwrap();
        assert!((res.decision[0] - 1.0).abs() < 1e-9);
        // Worst case no better than the worst observation, no worse than
        // the cap.
        assert!(res.value <= 0.02);
    }

    #[test]
    fn dominant_asset_concentrates() {
        let rows = vec![vec![0.05, 0.01], vec![0.04, 0.02], vec![0.06, -0.01]];
        let sm = SupportModel::box_from_data(&rows, 0.5).unwrap();
        let inst = PortfolioInstance::new(&rows, sm, -50.0).unwrap();
        let res = portfolio_lro(&inst).unwrap();
        assert!(res.decision[0] > 0.99, "{:?}", res.decision);
    }

    #[test]
    fn saddle_point_with_wide_box_and_loose_gamma() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let sm = SupportModel::Box { lo: vec![-5.0, -5.0], hi: vec![5.0, 5.0] };
        // Wide box: the cap -5(x1+x2) = -5 dominates payoffs, so with loose
        // gamma the worst case mixes toward the cap but the interior split
        // still maximizes the observed-scenario term.
        let inst = PortfolioInstance::new(&rows, sm, -8.0).unwrap();
        let res = portfolio_lro(&inst).unwrap();
        assert!((res.decision[0] - 0.5).abs() < 0.05, "{:?}", res.decision);
    }

    #[test]
    fn ball_cap_is_center_minus_radius_norm() {
        let sm = SupportModel::Ball { center: vec![0.1, 0.2], radius: 0.05 };
        let x = [0.6, 0.4];
        let cap = sm.payoff_cap(&x);
        let norm = (0.36f64 + 0.16).sqrt();
        assert!((cap - (0.06 + 0.08 - 0.05 * norm)).abs() < 1e-12);
        let sc = sm.cap_scenario(&x);
        assert!((dot(&sc, &x) - cap).abs() < 1e-12);
    }

    #[test]
    fn rows_outside_support_are_rejected() {
        let rows = vec![vec![0.5]];
        let sm = SupportModel::Box { lo: vec![-0.1], hi: vec![0.1] };
        assert!(PortfolioInstance::new(&rows, sm, -5.0).is_err());
    }

    #[test]
    fn duplicate_rows_merge_into_counts() {
        let rows = vec![vec![0.01, 0.0], vec![0.01, 0.0], vec![0.02, 0.01]];
        let sm = SupportModel::box_from_data(&rows, 0.5).unwrap();
        let inst = PortfolioInstance::new(&rows, sm, -10.0).unwrap();
        assert_eq!(inst.observations().len(), 2);
        assert_eq!(inst.observations().total(), 3);
    }
}
