//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

/// Errors shared by the solvers, calibration, and band machinery.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A domain type invariant was violated at construction.
    InvalidInput(String),
    /// The likelihood set (possibly intersected with side constraints) is
    /// empty. `margin` measures how far the instance is from feasibility:
    /// `gamma - max_log_likelihood` for a likelihood-only violation, or the
    /// phase-1 infeasibility of the linear system.
    EmptySet { margin: f64 },
    /// The CDF band admits no distribution.
    EmptyBand { margin: f64 },
    /// An iterative solve failed to meet its tolerance contract. Finite
    /// inputs should never land here; treat as a bug signal.
    NumericalFailure(String),
    /// Scalar decision interval with `lo > hi`.
    IntervalEmpty,
    /// Argument outside its mathematical domain (e.g. quantile level not in
    /// (0,1), zero probability passed where positivity is required).
    DomainError(String),
    /// The decision problem's feasible set is not supported by the requested
    /// optimizer.
    UnsupportedFeasibleSet,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::EmptySet { margin } => {
                write!(f, "empty likelihood set (margin {margin:e})")
            }
            Error::EmptyBand { margin } => write!(f, "empty CDF band (margin {margin:e})"),
            Error::NumericalFailure(msg) => write!(f, "numerical failure: {msg}"),
            Error::IntervalEmpty => write!(f, "empty decision interval"),
            Error::DomainError(msg) => write!(f, "domain error: {msg}"),
            Error::UnsupportedFeasibleSet => write!(f, "unsupported feasible set"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) type Result<T> = core::result::Result<T, Error>;
