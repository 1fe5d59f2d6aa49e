//! The likelihood robust distribution set and its feasibility checks.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::obs::{max_log_likelihood, ObservationSet};
use crate::simplex_lp::{self, LpRow, LpSense, LpStatus};
use crate::{FEAS_TOL, LIK_TOL};

/// Sense of one linear side-constraint row on the distribution `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    /// `coeffs . p >= rhs`
    Ge,
    /// `coeffs . p == rhs`
    Eq,
}

/// One row of a linear system on `p`, aligned with the support.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub sense: RowSense,
}

/// Linear side constraints `A p >= b` (rows may also be equalities).
///
/// The normalization `sum p_i = 1` is always enforced by the solvers as an
/// implicit leading equality row, so user rows here are additional
/// restrictions (moment constraints and the like). Equality rows carry free
/// dual multipliers, `Ge` rows nonnegative ones.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraints {
    rows: Vec<ConstraintRow>,
}

impl LinearConstraints {
    pub fn new(rows: Vec<ConstraintRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("constraint system must have at least one row".into()));
        }
        for (k, row) in rows.iter().enumerate() {
            if row.coeffs.iter().any(|c| !c.is_finite()) || !row.rhs.is_finite() {
                return Err(Error::InvalidInput(format!("constraint row {k} is not finite")));
            }
            if row.coeffs.iter().all(|&c| c == 0.0) {
                return Err(Error::InvalidInput(format!("constraint row {k} is all zeros")));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[ConstraintRow] {
        &self.rows
    }

    /// Fix the mean of a scalar payoff vector `d` to `target`.
    pub fn mean_equals(d: &[f64], target: f64) -> Result<Self> {
        Self::new(vec![ConstraintRow { coeffs: d.to_vec(), rhs: target, sense: RowSense::Eq }])
    }

    /// Append another row.
    pub fn and(mut self, row: ConstraintRow) -> Result<Self> {
        self.rows.push(row);
        Self::new(self.rows)
    }

    /// Largest violation of the system at distribution `p`.
    pub fn violation(&self, p: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().zip(p).map(|(a, x)| a * x).sum();
            let v = match row.sense {
                RowSense::Ge => (row.rhs - lhs).max(0.0),
                RowSense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }
}

/// The likelihood robust distribution set `D(gamma)`, optionally intersected
/// with linear side constraints.
#[derive(Debug, Clone)]
pub struct LikelihoodSet {
    observations: ObservationSet,
    gamma: f64,
    side_constraints: Option<LinearConstraints>,
}

impl LikelihoodSet {
    pub fn new(observations: ObservationSet, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::InvalidInput("gamma must be finite".into()));
        }
        Ok(Self { observations, gamma, side_constraints: None })
    }

    pub fn with_constraints(
        observations: ObservationSet,
        gamma: f64,
        constraints: LinearConstraints,
    ) -> Result<Self> {
        for (k, row) in constraints.rows().iter().enumerate() {
            if row.coeffs.len() != observations.len() {
                return Err(Error::InvalidInput(format!(
                    "constraint row {k} has {} coefficients for {} support points",
                    row.coeffs.len(),
                    observations.len()
                )));
            }
        }
        Ok(Self { observations, gamma, side_constraints: Some(constraints) })
    }

    pub fn observations(&self) -> &ObservationSet {
        &self.observations
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn side_constraints(&self) -> Option<&LinearConstraints> {
        self.side_constraints.as_ref()
    }

    /// Maximum achievable log-likelihood of the underlying observations.
    pub fn max_log_likelihood(&self) -> f64 {
        max_log_likelihood(&self.observations)
    }
}

/// Outcome of a feasibility check on a [`LikelihoodSet`].
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityReport {
    /// The set contains at least one distribution. `likelihood_margin` is
    /// `max_log_likelihood - gamma` (how much threshold slack remains).
    Nonempty { likelihood_margin: f64, mle_satisfies_constraints: bool },
    /// The set is empty; `margin` quantifies the violation and `reason`
    /// names the failing stage.
    Empty { margin: f64, reason: String },
}

impl FeasibilityReport {
    pub fn is_nonempty(&self) -> bool {
        matches!(self, FeasibilityReport::Nonempty { .. })
    }

    /// Convert an emptiness report into the corresponding error.
    pub fn into_result(self) -> Result<Self> {
        match &self {
            FeasibilityReport::Nonempty { .. } => Ok(self),
            FeasibilityReport::Empty { margin, .. } => Err(Error::EmptySet { margin: *margin }),
        }
    }
}

/// Check whether `D(gamma)` (with side constraints, if any) is nonempty.
///
/// Stages: (1) `gamma <= max_log_likelihood`, otherwise even the empirical
/// distribution violates the likelihood constraint and the set is empty;
/// (2) a phase-1 LP on the linear system over the simplex; (3) whether the
/// empirical distribution itself satisfies the side constraints (when it
/// does, the intersection is certainly nonempty). When stage 3 fails but
/// stages 1-2 pass, the intersection of the likelihood region with the
/// linear system is resolved by the constrained solver at solve time.
pub fn validate_likelihood_set(set: &LikelihoodSet) -> FeasibilityReport {
    let gamma_max = set.max_log_likelihood();
    let margin = gamma_max - set.gamma();
    if margin < -LIK_TOL {
        return FeasibilityReport::Empty {
            margin: -margin,
            reason: "gamma exceeds the maximum achievable log-likelihood".into(),
        };
    }
    let mut mle_ok = true;
    if let Some(cons) = set.side_constraints() {
        match phase1_simplex_feasibility(cons, set.observations().len()) {
            Ok(infeas) if infeas > FEAS_TOL => {
                return FeasibilityReport::Empty {
                    margin: infeas,
                    reason: "side constraints admit no distribution on the simplex".into(),
                }
            }
            Ok(_) => {}
            Err(_) => {
                return FeasibilityReport::Empty {
                    margin: f64::INFINITY,
                    reason: "phase-1 feasibility LP failed".into(),
                }
            }
        }
        mle_ok = cons.violation(&set.observations().mle()) <= FEAS_TOL;
    }
    FeasibilityReport::Nonempty { likelihood_margin: margin.max(0.0), mle_satisfies_constraints: mle_ok }
}

/// Phase-1 infeasibility of `{ p on the simplex : A p >= b }`; zero (within
/// roundoff) iff some distribution satisfies all rows.
pub(crate) fn phase1_simplex_feasibility(cons: &LinearConstraints, n: usize) -> Result<f64> {
    let mut rows: Vec<LpRow> = Vec::with_capacity(cons.rows().len() + 1);
    rows.push(LpRow { coeffs: vec![1.0; n], rhs: 1.0, sense: simplex_lp::RowCmp::Eq });
    for row in cons.rows() {
        rows.push(LpRow {
            coeffs: row.coeffs.clone(),
            rhs: row.rhs,
            sense: match row.sense {
                RowSense::Ge => simplex_lp::RowCmp::Ge,
                RowSense::Eq => simplex_lp::RowCmp::Eq,
            },
        });
    }
    let zero_obj = vec![0.0; n];
    match simplex_lp::solve(&zero_obj, &rows, LpSense::Minimize)? {
        LpStatus::Optimal { .. } => Ok(0.0),
        LpStatus::Infeasible { infeasibility } => Ok(infeasibility),
        LpStatus::Unbounded => Err(Error::NumericalFailure(
            "phase-1 feasibility LP reported unbounded".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs_two() -> ObservationSet {
        ObservationSet::from_scalar(&[0.0, 1.0], &[1, 1]).unwrap()
    }

    #[test]
    fn boundary_gamma_is_nonempty() {
        let gamma_max = 2.0 * 0.5f64.ln();
        let set = LikelihoodSet::new(obs_two(), gamma_max).unwrap();
        assert!(validate_likelihood_set(&set).is_nonempty());
    }

    #[test]
    fn gamma_above_max_is_empty() {
        let gamma_max = 2.0 * 0.5f64.ln();
        let set = LikelihoodSet::new(obs_two(), gamma_max + 0.1).unwrap();
        let report = validate_likelihood_set(&set);
        match report {
            FeasibilityReport::Empty { margin, .. } => {
                assert!((margin - 0.1).abs() < 1e-12);
            }
            _ => panic!("expected empty"),
        }
        assert!(report.into_result().is_err());
    }

    #[test]
    fn very_loose_gamma_is_nonempty() {
        let set = LikelihoodSet::new(obs_two(), -1e6).unwrap();
        assert!(validate_likelihood_set(&set).is_nonempty());
    }

    #[test]
    fn mean_constraint_outside_hull_is_empty() {
        let cons = LinearConstraints::mean_equals(&[0.0, 1.0], 2.0).unwrap();
        let set = LikelihoodSet::with_constraints(obs_two(), -10.0, cons).unwrap();
        let report = validate_likelihood_set(&set);
        assert!(!report.is_nonempty(), "{report:?}");
    }

    #[test]
    fn sample_mean_constraint_keeps_mle_feasible() {
        let cons = LinearConstraints::mean_equals(&[0.0, 1.0], 0.5).unwrap();
        let set = LikelihoodSet::with_constraints(obs_two(), -10.0, cons).unwrap();
        match validate_likelihood_set(&set) {
            FeasibilityReport::Nonempty { mle_satisfies_constraints, .. } => {
                assert!(mle_satisfies_constraints)
            }
            other => panic!("expected nonempty, got {other:?}"),
        }
    }
}
