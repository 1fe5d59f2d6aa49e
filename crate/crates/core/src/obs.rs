//! Observed data over a known finite support.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Scenario support points with occurrence counts.
///
/// The support is the full set of outcomes the modeler considers possible;
/// points never observed are kept with a zero count because the worst case
/// may place mass there. Support points are `d`-dimensional (scalars are
/// `d = 1`) and must be pairwise distinct. Duplicates are rejected rather
/// than merged.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    support: Vec<Vec<f64>>,
    counts: Vec<u64>,
    total: u64,
    dim: usize,
}

impl ObservationSet {
    /// Build a set with vector-valued support points.
    pub fn new(support: Vec<Vec<f64>>, counts: Vec<u64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidInput("support must be nonempty".into()));
        }
        if support.len() != counts.len() {
            return Err(Error::InvalidInput(format!(
                "support length {} != counts length {}",
                support.len(),
                counts.len()
            )));
        }
        let dim = support[0].len();
        if dim == 0 {
            return Err(Error::InvalidInput("support points must have dimension >= 1".into()));
        }
        for (i, point) in support.iter().enumerate() {
            if point.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "support point {i} has dimension {} != {dim}",
                    point.len()
                )));
            }
            if point.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("support point {i} is not finite")));
            }
        }
        for i in 0..support.len() {
            for j in (i + 1)..support.len() {
                if support[i] == support[j] {
                    return Err(Error::InvalidInput(format!(
                        "duplicate support points at indices {i} and {j}"
                    )));
                }
            }
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidInput("at least one count must be positive".into()));
        }
        Ok(Self { support, counts, total, dim })
    }

    /// Build a set with scalar support points.
    pub fn from_scalar(support: &[f64], counts: &[u64]) -> Result<Self> {
        Self::new(support.iter().map(|&v| alloc::vec![v]).collect(), counts.to_vec())
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: support nonempty
    }

    /// Dimension of each support point.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &[Vec<f64>] {
        &self.support
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Total number of observations `N`.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Scalar view of the support; errors when `dim != 1`.
    pub fn scalar_support(&self) -> Result<Vec<f64>> {
        if self.dim != 1 {
            return Err(Error::InvalidInput(format!(
                "scalar support requested but dimension is {}",
                self.dim
            )));
        }
        Ok(self.support.iter().map(|p| p[0]).collect())
    }

    /// The empirical (maximum likelihood) distribution `N_i / N`.
    pub fn mle(&self) -> Vec<f64> {
        let n = self.total as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Indices with at least one observation.
    pub fn observed_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, _)| i)
    }

    /// Number of distinct observed outcomes.
    pub fn observed_count(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Log-likelihood of the data under distribution `p` (natural log).
    ///
    /// Zero-count points contribute nothing; a zero probability on an
    /// observed point yields `-inf`.
    pub fn log_likelihood(&self, p: &[f64]) -> f64 {
        debug_assert_eq!(p.len(), self.len());
        let mut sum = 0.0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > 0 {
                sum += c as f64 * math::ln(p[i]);
            }
        }
        sum
    }
}

/// Maximum achievable log-likelihood, attained at the empirical distribution:
/// `sum over observed i of N_i * ln(N_i / N)`.
///
/// Always `<= 0`, with equality iff exactly one count is positive.
pub fn max_log_likelihood(obs: &ObservationSet) -> f64 {
    let n = obs.total() as f64;
    let mut sum = 0.0;
    for &c in obs.counts() {
        if c > 0 {
            sum += c as f64 * math::ln_ratio(c as f64, n);
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_shape_mismatches() {
        assert!(ObservationSet::from_scalar(&[1.0, 1.0], &[1, 1]).is_err());
        assert!(ObservationSet::from_scalar(&[1.0, 2.0], &[1]).is_err());
        assert!(ObservationSet::from_scalar(&[1.0, 2.0], &[0, 0]).is_err());
        assert!(ObservationSet::from_scalar(&[], &[]).is_err());
    }

    #[test]
    fn max_log_likelihood_two_uniform_points() {
        let obs = ObservationSet::from_scalar(&[0.0, 1.0], &[1, 1]).unwrap();
        let got = max_log_likelihood(&obs);
        assert!((got - 2.0 * 0.5f64.ln()).abs() < 1e-15, "got {got}");
    }

    #[test]
    fn max_log_likelihood_degenerate_is_zero() {
        let obs = ObservationSet::from_scalar(&[1.0, 2.0], &[4, 0]).unwrap();
        assert_eq!(max_log_likelihood(&obs), 0.0);
    }

    #[test]
    fn max_log_likelihood_three_point_fixture() {
        // Frozen from the simplex-grid oracle (lro-oracle): direct summation
        // 3 ln(3/5) + ln(1/5) + ln(1/5), grid max within 2e-6 of this value.
        let obs = ObservationSet::from_scalar(&[1.0, 2.0, 3.0], &[3, 1, 1]).unwrap();
        let got = max_log_likelihood(&obs);
        assert!((got - (-4.751_352_696_166_172_f64)).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn zero_count_points_are_retained() {
        let obs = ObservationSet::from_scalar(&[1.0, 2.0, 3.0], &[0, 5, 0]).unwrap();
        assert_eq!(obs.len(), 3);
        assert_eq!(obs.observed_count(), 1);
        assert_eq!(max_log_likelihood(&obs), 0.0);
    }
}
