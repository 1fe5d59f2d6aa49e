//! Dense two-phase primal simplex with Bland's rule.
//!
//! Small self-contained LP solver for the band robust counterpart and for
//! phase-1 feasibility checks. Problems here are tiny (at most a few hundred
//! rows), so a dense tableau is adequate. Bland's pivoting rule guarantees
//! termination.
//!
//! All structural variables are nonnegative; free variables must be split by
//! the caller. Rows may be `<=`, `>=`, or `==`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowCmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub sense: RowCmp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpSense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpStatus {
    Optimal { x: Vec<f64>, value: f64 },
    /// Phase-1 optimum is positive: no feasible point. The value is the
    /// residual infeasibility (sum of artificial variables).
    Infeasible { infeasibility: f64 },
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>, // m x (width + 1), rhs in last column
    basis: Vec<usize>,
    width: usize,
    art_start: usize,
    eps: f64,
}

/// Solve `optimize c.x` subject to the rows and `x >= 0`.
pub fn solve(objective: &[f64], rows: &[LpRow], sense: LpSense) -> Result<LpStatus> {
    let n = objective.len();
    for (k, row) in rows.iter().enumerate() {
        if row.coeffs.len() != n {
            return Err(Error::InvalidInput(alloc::format!(
                "LP row {k} has {} coefficients, expected {n}",
                row.coeffs.len()
            )));
        }
    }
    let m = rows.len();

    let n_slack = rows.iter().filter(|r| r.sense != RowCmp::Eq).count();
    let mut scale: f64 = 1.0;
    for row in rows {
        for &c in &row.coeffs {
            scale = scale.max(c.abs());
        }
        scale = scale.max(row.rhs.abs());
    }
    let eps = 1e-9 * scale.max(1.0);

    // Standard form: slack per inequality, artificial wherever the slack
    // cannot serve as the initial basic variable.
    let width = n + n_slack + m; // upper bound on artificial count
    let mut t = Tableau {
        rows: vec![vec![0.0; width + 1]; m],
        basis: vec![0; m],
        width,
        art_start: n + n_slack,
        eps,
    };

    let mut slack_idx = n;
    let mut art_idx = t.art_start;
    for (i, row) in rows.iter().enumerate() {
        let flip = row.rhs < 0.0;
        let sgn = if flip { -1.0 } else { 1.0 };
        for (j, &c) in row.coeffs.iter().enumerate() {
            t.rows[i][j] = sgn * c;
        }
        t.rows[i][width] = sgn * row.rhs;
        let effective = match (row.sense, flip) {
            (RowCmp::Eq, _) => RowCmp::Eq,
            (RowCmp::Le, false) | (RowCmp::Ge, true) => RowCmp::Le,
            (RowCmp::Ge, false) | (RowCmp::Le, true) => RowCmp::Ge,
        };
        match effective {
            RowCmp::Le => {
                t.rows[i][slack_idx] = 1.0;
                t.basis[i] = slack_idx;
                slack_idx += 1;
            }
            RowCmp::Ge => {
                t.rows[i][slack_idx] = -1.0;
                slack_idx += 1;
                t.rows[i][art_idx] = 1.0;
                t.basis[i] = art_idx;
                art_idx += 1;
            }
            RowCmp::Eq => {
                t.rows[i][art_idx] = 1.0;
                t.basis[i] = art_idx;
                art_idx += 1;
            }
        }
    }
    let n_art = art_idx - t.art_start;

    // Phase 1: minimize the sum of artificials.
    if n_art > 0 {
        let mut cost1 = vec![0.0; width + 1];
        for j in t.art_start..art_idx {
            cost1[j] = 1.0;
        }
        reduce_cost_row(&t, &mut cost1);
        let limit = t.art_start;
        run_simplex(&mut t, &mut cost1, limit, "phase 1")?;
        let infeas = -cost1[width]; // cost row stores negated objective value
        if infeas > 1e-8 * scale.max(1.0) {
            return Ok(LpStatus::Infeasible { infeasibility: infeas });
        }
        drive_out_artificials(&mut t)?;
    }

    // Phase 2 on the caller's objective.
    let sgn = match sense {
        LpSense::Minimize => 1.0,
        LpSense::Maximize => -1.0,
    };
    let mut cost2 = vec![0.0; width + 1];
    for j in 0..n {
        cost2[j] = sgn * objective[j];
    }
    reduce_cost_row(&t, &mut cost2);
    let limit = t.n_structural_limit();
    if run_simplex(&mut t, &mut cost2, limit, "phase 2")? {
        return Ok(LpStatus::Unbounded);
    }

    let mut x = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rows[i][width];
        }
    }
    let value: f64 = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpStatus::Optimal { x, value })
}

impl Tableau {
    /// Columns eligible to enter in phase 2 (everything except artificials).
    fn n_structural_limit(&self) -> usize {
        self.art_start
    }
}

/// Make the cost row consistent with the current basis (zero reduced cost on
/// basic columns).
fn reduce_cost_row(t: &Tableau, cost: &mut [f64]) {
    for (i, &b) in t.basis.iter().enumerate() {
        let c = cost[b];
        if c != 0.0 {
            for j in 0..=t.width {
                cost[j] -= c * t.rows[i][j];
            }
        }
    }
}

/// Bland-rule simplex sweep on the given cost row. Returns `Ok(true)` when
/// the problem is unbounded in the entering direction.
fn run_simplex(t: &mut Tableau, cost: &mut [f64], col_limit: usize, stage: &str) -> Result<bool> {
    let max_iters = 200 * (t.width + t.rows.len() + 1);
    for _ in 0..max_iters {
        // Bland: first column with negative reduced cost.
        let mut entering = None;
        for j in 0..col_limit {
            if cost[j] < -t.eps {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else { return Ok(false) };

        // Ratio test; Bland tie-break on the smallest basic variable index.
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..t.rows.len() {
            let a = t.rows[i][j];
            if a > t.eps {
                let ratio = t.rows[i][t.width] / a;
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - t.eps
                            || (ratio < br + t.eps && t.basis[i] < t.basis[bi])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((pivot_row, _)) = leave else { return Ok(true) };
        pivot(t, cost, pivot_row, j);
    }
    Err(Error::NumericalFailure(String::from(stage) + ": simplex iteration cap exceeded"))
}

fn pivot(t: &mut Tableau, cost: &mut [f64], pr: usize, pc: usize) {
    let piv = t.rows[pr][pc];
    for j in 0..=t.width {
        t.rows[pr][j] /= piv;
    }
    t.rows[pr][pc] = 1.0;
    for i in 0..t.rows.len() {
        if i != pr {
            let f = t.rows[i][pc];
            if f != 0.0 {
                for j in 0..=t.width {
                    t.rows[i][j] -= f * t.rows[pr][j];
                }
                t.rows[i][pc] = 0.0;
            }
        }
    }
    let f = cost[pc];
    if f != 0.0 {
        for j in 0..=t.width {
            cost[j] -= f * t.rows[pr][j];
        }
        cost[pc] = 0.0;
    }
    t.basis[pr] = pc;
}

/// After phase 1, pivot remaining artificials out of the basis; rows that
/// cannot be pivoted are redundant and dropped.
fn drive_out_artificials(t: &mut Tableau) -> Result<()> {
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= t.art_start {
            let mut pivot_col = None;
            for j in 0..t.art_start {
                if t.rows[i][j].abs() > t.eps {
                    pivot_col = Some(j);
                    break;
                }
            }
            match pivot_col {
                Some(j) => {
                    let mut dummy = vec![0.0; t.width + 1];
                    pivot(t, &mut dummy, i, j);
                    i += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coeffs: &[f64], sense: RowCmp, rhs: f64) -> LpRow {
        LpRow { coeffs: coeffs.to_vec(), rhs, sense }
    }

    #[test]
    fn solves_textbook_maximization() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36.
        let status = solve(
            &[3.0, 5.0],
            &[
                row(&[1.0, 0.0], RowCmp::Le, 4.0),
                row(&[0.0, 2.0], RowCmp::Le, 12.0),
                row(&[3.0, 2.0], RowCmp::Le, 18.0),
            ],
            LpSense::Maximize,
        )
        .unwrap();
        match status {
            LpStatus::Optimal { x, value } => {
                assert!((value - 36.0).abs() < 1e-9);
                assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_infeasible_system() {
        let status = solve(
            &[1.0],
            &[row(&[1.0], RowCmp::Ge, 2.0), row(&[1.0], RowCmp::Le, 1.0)],
            LpSense::Minimize,
        )
        .unwrap();
        assert!(matches!(status, LpStatus::Infeasible { .. }));
    }

    #[test]
    fn detects_unbounded_direction() {
        let status = solve(
            &[1.0, 0.0],
            &[row(&[1.0, -1.0], RowCmp::Le, 1.0)],
            LpSense::Maximize,
        )
        .unwrap();
        assert_eq!(status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_rows_with_degenerate_pivots_terminate() {
        // min x1 + x2 st x1 + x2 + x3 = 1, x1 - x2 = 0 -> x3 = 1, value 0.
        let status = solve(
            &[1.0, 1.0, 0.0],
            &[
                row(&[1.0, 1.0, 1.0], RowCmp::Eq, 1.0),
                row(&[1.0, -1.0, 0.0], RowCmp::Eq, 0.0),
            ],
            LpSense::Minimize,
        )
        .unwrap();
        match status {
            LpStatus::Optimal { value, .. } => assert!(value.abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }
}
