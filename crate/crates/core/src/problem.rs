//! Decision problem description: objective evaluator and feasible set.

use alloc::boxed::Box;
use alloc::string::String;

use crate::error::{Error, Result};

/// The decision objective `h(x, xi)`.
///
/// Implementations must be deterministic: the same `(x, xi)` always yields
/// the same value.
pub trait Objective {
    fn eval(&self, x: &[f64], xi: &[f64]) -> f64;
    /// Whether `h` is concave in `x` for every fixed scenario (the outer
    /// maximization relies on this for unimodality of the worst-case value).
    fn concave_in_x(&self) -> bool {
        true
    }
}

impl<F: Fn(&[f64], &[f64]) -> f64> Objective for F {
    fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        self(x, xi)
    }
}

/// Feasible set of the decision variable.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    /// Scalar decisions on `[lo, hi]`; with `integer`, only integer points.
    Interval { lo: f64, hi: f64, integer: bool },
    /// The unit simplex over `dim` coordinates.
    Simplex { dim: usize },
    /// Componentwise box (declared for completeness; no optimizer here
    /// accepts it).
    Box { lo: alloc::vec::Vec<f64>, hi: alloc::vec::Vec<f64> },
}

/// Optimization sense of the outer problem. The toolkit maximizes the
/// worst-case expectation; minimization problems (e.g. newsvendor cost) are
/// expressed by negating the objective at the application layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    MaximizeWorstCase,
}

/// A decision problem: objective, feasible set, and sense.
pub struct DecisionProblem {
    objective: Box<dyn Objective + Send + Sync>,
    feasible_set: FeasibleSet,
    sense: Sense,
    label: String,
}

impl DecisionProblem {
    pub fn new(
        objective: Box<dyn Objective + Send + Sync>,
        feasible_set: FeasibleSet,
    ) -> Result<Self> {
        if let FeasibleSet::Interval { lo, hi, .. } = &feasible_set {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::InvalidInput("interval bounds must be finite".into()));
            }
            if lo > hi {
                return Err(Error::IntervalEmpty);
            }
        }
        if let FeasibleSet::Simplex { dim } = &feasible_set {
            if *dim == 0 {
                return Err(Error::InvalidInput("simplex dimension must be positive".into()));
            }
        }
        Ok(Self { objective, feasible_set, sense: Sense::MaximizeWorstCase, label: String::new() })
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.into();
        self
    }

    pub fn objective(&self) -> &(dyn Objective + Send + Sync) {
        self.objective.as_ref()
    }

    pub fn feasible_set(&self) -> &FeasibleSet {
        &self.feasible_set
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl core::fmt::Debug for DecisionProblem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DecisionProblem")
            .field("feasible_set", &self.feasible_set)
            .field("sense", &self.sense)
            .field("label", &self.label)
            .finish()
    }
}
