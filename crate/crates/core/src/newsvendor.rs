//! Newsvendor application: LRO, moment-constrained LRO, Scarf, and the
//! empirical baseline, with evaluation under both measures.
//!
//! Cost of stocking `x` against demand `d` is `b (d - x)+ + h (x - d)+`.
//! Solvers work internally on the reward `-cost` so that the shared outer
//! machinery always maximizes a concave worst case; everything surfaced
//! from this module is back in cost units.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::inner::{
    worst_case_expectation, worst_case_expectation_constrained, PayoffVector, WorstCaseSolution,
};
use crate::math;
use crate::obs::ObservationSet;
use crate::outer::optimize_scalar_with;
use crate::set::{ConstraintRow, LikelihoodSet, LinearConstraints, RowSense};

/// A newsvendor problem instance on an integer demand grid.
#[derive(Debug, Clone)]
pub struct NewsvendorInstance {
    b: f64,
    h_cost: f64,
    grid: Vec<i64>,
    observations: ObservationSet,
}

impl NewsvendorInstance {
    /// Build from per-grid-point observation counts. The grid is the full
    /// demand support; unobserved grid points keep zero counts.
    pub fn new(b: f64, h_cost: f64, grid: Vec<i64>, counts: Vec<u64>) -> Result<Self> {
        if !(b > 0.0) || !(h_cost > 0.0) {
            return Err(Error::InvalidInput("underage and overage costs must be positive".into()));
        }
        let support: Vec<f64> = grid.iter().map(|&d| d as f64).collect();
        let observations = ObservationSet::from_scalar(&support, &counts)?;
        Ok(Self { b, h_cost, grid, observations })
    }

    /// Build from raw demand samples on the inclusive grid `[lo, hi]`.
    pub fn from_samples(b: f64, h_cost: f64, lo: i64, hi: i64, samples: &[i64]) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidInput("grid lo > hi".into()));
        }
        let mut counts = alloc::vec![0u64; (hi - lo + 1) as usize];
        for &s in samples {
            if s < lo || s > hi {
                return Err(Error::InvalidInput(format!("sample {s} outside grid [{lo}, {hi}]")));
            }
            counts[(s - lo) as usize] += 1;
        }
        Self::new(b, h_cost, (lo..=hi).collect(), counts)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn h_cost(&self) -> f64 {
        self.h_cost
    }

    pub fn grid(&self) -> &[i64] {
        &self.grid
    }

    pub fn observations(&self) -> &ObservationSet {
        &self.observations
    }

    /// `b (d - x)+ + h (x - d)+`.
    pub fn cost(&self, x: f64, d: f64) -> f64 {
        self.b * (d - x).max(0.0) + self.h_cost * (x - d).max(0.0)
    }

    /// Critical fractile `b / (b + h)`.
    pub fn critical_fractile(&self) -> f64 {
        self.b / (self.b + self.h_cost)
    }

    /// Sample mean and (divide-by-N) variance of the observed demand.
    ///
    /// The divide-by-N convention keeps the empirical distribution feasible
    /// for the moment-constrained set built from the same data.
    pub fn sample_moments(&self) -> (f64, f64) {
        let counts = self.observations.counts();
        let n: f64 = self.observations.total() as f64;
        let mut mean = 0.0;
        for (i, &c) in counts.iter().enumerate() {
            mean += c as f64 * self.grid[i] as f64;
        }
        mean /= n;
        let mut var = 0.0;
        for (i, &c) in counts.iter().enumerate() {
            let d = self.grid[i] as f64 - mean;
            var += c as f64 * d * d;
        }
        var /= n;
        (mean, var)
    }

    fn reward_payoffs(&self, x: f64) -> Result<PayoffVector> {
        PayoffVector::new(self.grid.iter().map(|&d| -self.cost(x, d as f64)).collect())
    }
}

/// Optional side constraints for the moment-constrained LRO variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentConstraints {
    /// Pin the distribution mean and second moment to the sample values.
    SampleMeanAndVariance,
}

/// Result of a worst-case newsvendor solve, in cost units.
#[derive(Debug, Clone)]
pub struct NewsvendorLro {
    /// Optimal stocking quantity.
    pub decision: i64,
    /// Worst-case expected cost at the decision.
    pub worst_case_cost: f64,
    /// The cost-maximizing distribution at the decision.
    pub distribution: Vec<f64>,
    /// Reward-domain inner solution (dual certificates refer to the payoff
    /// `-cost`).
    pub inner: WorstCaseSolution,
    pub iterations: usize,
}

fn build_set(
    inst: &NewsvendorInstance,
    gamma: f64,
    moments: Option<MomentConstraints>,
) -> Result<LikelihoodSet> {
    match moments {
        None => LikelihoodSet::new(inst.observations.clone(), gamma),
        Some(MomentConstraints::SampleMeanAndVariance) => {
            let (mean, var) = inst.sample_moments();
            let d1: Vec<f64> = inst.grid.iter().map(|&d| d as f64).collect();
            let d2: Vec<f64> = inst.grid.iter().map(|&d| (d * d) as f64).collect();
            let cons = LinearConstraints::mean_equals(&d1, mean)?
                .and(ConstraintRow { coeffs: d2, rhs: mean * mean + var, sense: RowSense::Eq })?;
            LikelihoodSet::with_constraints(inst.observations.clone(), gamma, cons)
        }
    }
}

/// Minimize the worst-case expected cost over integer stock levels.
pub fn newsvendor_lro(
    inst: &NewsvendorInstance,
    gamma: f64,
    moments: Option<MomentConstraints>,
) -> Result<NewsvendorLro> {
    let set = build_set(inst, gamma, moments)?;
    let constrained = set.side_constraints().is_some();
    let lo = *inst.grid.first().unwrap() as f64;
    let hi = *inst.grid.last().unwrap() as f64;
    let eval = |x: f64| -> Result<WorstCaseSolution> {
        let payoffs = inst.reward_payoffs(x)?;
        if constrained {
            worst_case_expectation_constrained(&set, &payoffs)
        } else {
            worst_case_expectation(&set, &payoffs)
        }
    };
    let (x, sol, iterations) = optimize_scalar_with(eval, lo, hi, true)?;
    Ok(NewsvendorLro {
        decision: x as i64,
        worst_case_cost: -sol.value,
        distribution: sol.distribution.clone(),
        inner: sol,
        iterations,
    })
}

/// Scarf's closed-form min-max stocking quantity for a mean-variance
/// distribution set: `mu + (sigma/2) (sqrt(b/h) - sqrt(h/b))`.
pub fn newsvendor_scarf(mu_hat: f64, sigma_hat: f64, b: f64, h_cost: f64) -> Result<f64> {
    if !(b > 0.0) || !(h_cost > 0.0) {
        return Err(Error::InvalidInput("costs must be positive".into()));
    }
    if sigma_hat < 0.0 {
        return Err(Error::InvalidInput("sigma must be nonnegative".into()));
    }
    Ok(mu_hat + 0.5 * sigma_hat * (math::sqrt(b / h_cost) - math::sqrt(h_cost / b)))
}

/// The two-point worst-case distribution of the mean-variance (Scarf) model
/// at stock level `x`: support `x -+ R` with `R = sqrt((x - mu)^2 + sigma^2)`
/// and masses `(R -+ (mu - x)) / (2R)`. Independent of the costs.
pub fn scarf_worst_case_distribution(mu_hat: f64, sigma_hat: f64, x: f64) -> Vec<(f64, f64)> {
    let m = mu_hat - x;
    let r = math::sqrt(m * m + sigma_hat * sigma_hat);
    if r == 0.0 {
        return alloc::vec![(mu_hat, 1.0)];
    }
    alloc::vec![(x - r, (r - m) / (2.0 * r)), (x + r, (r + m) / (2.0 * r))]
}

/// Critical-fractile decision under the empirical distribution: the smallest
/// grid point whose empirical CDF reaches `b / (b + h)`.
pub fn newsvendor_empirical(inst: &NewsvendorInstance) -> i64 {
    let q = inst.critical_fractile();
    let n = inst.observations().total() as f64;
    let mut cum = 0.0;
    for (i, &c) in inst.observations().counts().iter().enumerate() {
        cum += c as f64 / n;
        if cum >= q - 1e-12 {
            return inst.grid[i];
        }
    }
    *inst.grid.last().unwrap()
}

/// Exhaustive expected-cost minimizer under a known pmf on the grid; ties
/// (within `1e-9`) break to the midpoint of the optimal run.
pub fn newsvendor_true_optimal(inst: &NewsvendorInstance, pmf: &[f64]) -> Result<i64> {
    if pmf.len() != inst.grid.len() {
        return Err(Error::InvalidInput("pmf length != grid length".into()));
    }
    let mut values = Vec::with_capacity(inst.grid.len());
    let mut best = f64::INFINITY;
    for &x in &inst.grid {
        let v = evaluate_decision(x, pmf, inst)?;
        if v < best {
            best = v;
        }
        values.push(v);
    }
    let tie_tol = 1e-9 * (1.0 + best.abs());
    let ties: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| (**v - best) <= tie_tol)
        .map(|(i, _)| i)
        .collect();
    Ok(inst.grid[ties[(ties.len() - 1) / 2]])
}

/// Expected cost of stocking `x` under a distribution on the grid.
pub fn evaluate_decision(x: i64, dist: &[f64], inst: &NewsvendorInstance) -> Result<f64> {
    if dist.len() != inst.grid.len() {
        return Err(Error::InvalidInput("distribution length != grid length".into()));
    }
    Ok(inst
        .grid
        .iter()
        .zip(dist)
        .map(|(&d, &p)| p * inst.cost(x as f64, d as f64))
        .sum())
}

/// Worst-case expected cost of stocking `x` under the likelihood set (the
/// `h_LRO` evaluation column).
pub fn evaluate_lro_measure(x: i64, set: &LikelihoodSet, inst: &NewsvendorInstance) -> Result<f64> {
    let payoffs = inst.reward_payoffs(x as f64)?;
    let sol = if set.side_constraints().is_some() {
        worst_case_expectation_constrained(set, &payoffs)?
    } else {
        worst_case_expectation(set, &payoffs)?
    };
    Ok(-sol.value)
}

/// Total-variation distance `0.5 sum |p_i - q_i|` between distributions on a
/// common support.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Bin an off-grid two-point distribution onto the instance grid by rounding
/// each point to the nearest grid value (clamped to the grid range).
pub fn bin_to_grid(points: &[(f64, f64)], grid: &[i64]) -> Vec<f64> {
    let lo = *grid.first().unwrap();
    let hi = *grid.last().unwrap();
    let mut out = alloc::vec![0.0; grid.len()];
    for &(d, mass) in points {
        let k = libm::round(d).max(lo as f64).min(hi as f64) as i64;
        // Grid is sorted; locate by binary search.
        if let Ok(idx) = grid.binary_search(&k) {
            out[idx] += mass;
        } else {
            // Non-contiguous grid: nearest by scan.
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (i, &g) in grid.iter().enumerate() {
                let dist = (g as f64 - d).abs();
                if dist < best_d {
                    best_d = dist;
                    best = i;
                }
            }
            out[best] += mass;
        }
    }
    out
}
