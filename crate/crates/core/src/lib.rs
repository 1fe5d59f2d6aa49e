//! Likelihood robust optimization (LRO) over finite supports.
//!
//! Given observed counts `N_1..N_n` on known support points, the likelihood
//! robust distribution set with threshold `gamma` is
//!
//! ```text
//! D(gamma) = { p on the simplex : sum_i N_i * ln(p_i) >= gamma }
//! ```
//!
//! and the LRO decision problem maximizes, over feasible decisions `x`, the
//! expectation of `h(x, xi)` under the worst-case distribution in `D(gamma)`.
//! This crate provides:
//!
//! - domain types and validation ([`ObservationSet`], [`LikelihoodSet`]),
//! - the inner worst-case solvers with dual certificates ([`inner`]),
//! - outer decision optimization over intervals and the unit simplex
//!   ([`outer`]),
//! - statistical calibration of `gamma` (chi-square asymptotics, Dirichlet
//!   coverage, entropy CLT, profile-likelihood mean intervals) ([`calib`]),
//! - the continuous-state variant via CDF bands and a built-in dense simplex
//!   LP ([`band`]),
//! - the newsvendor and portfolio applications with their comparison
//!   baselines ([`newsvendor`], [`portfolio`], [`backtest`]).
//!
//! The crate is `no_std` (with `alloc`); all file formats and the CLI live in
//! the companion `lro-cli` crate. Every solver is deterministic: fixed
//! initialization, fixed iteration caps, and seeded RNG streams where
//! sampling is involved.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod backtest;
pub mod band;
pub mod calib;
pub mod error;
pub mod inner;
mod math;
pub mod newsvendor;
pub mod obs;
pub mod outer;
pub mod portfolio;
pub mod problem;
pub mod rng;
pub mod set;
pub mod simplex_lp;

pub use backtest::{run_backtest, BacktestConfig, BacktestReport, Strategy, StrategyStats};
pub use band::{
    band_optimize_scalar, band_worst_case, ks_band, BandRobustSolution, CdfBand, KsQuantileRule,
    SupportBounds,
};
pub use calib::{
    chi_square_quantile, dirichlet_coverage, entropy_clt_stats, profile_mean_interval,
    select_gamma, DofRule, EntropyCltStats, GammaBasis, GammaChoice, ProfileLikelihoodInterval,
};
pub use error::Error;
pub use inner::{
    dual_objective, dual_objective_constrained, worst_case_expectation,
    worst_case_expectation_capped, worst_case_expectation_constrained, CappedWorstCase, DualMu,
    PayoffVector, WorstCaseSolution,
};
pub use newsvendor::{
    evaluate_decision, evaluate_lro_measure, newsvendor_empirical, newsvendor_lro,
    newsvendor_scarf, newsvendor_true_optimal, scarf_worst_case_distribution, tv_distance,
    MomentConstraints, NewsvendorInstance,
};
pub use obs::ObservationSet;
pub use outer::{optimize_scalar, optimize_simplex, project_onto_simplex, OuterResult};
pub use portfolio::{portfolio_lro, PortfolioInstance, SupportModel};
pub use problem::{DecisionProblem, FeasibleSet, Objective, Sense};
pub use set::{
    validate_likelihood_set, ConstraintRow, FeasibilityReport, LikelihoodSet, LinearConstraints,
    RowSense,
};

/// Absolute tolerance for probability sums and linear feasibility checks.
pub const FEAS_TOL: f64 = 1e-8;
/// Absolute tolerance on the log-likelihood constraint.
pub const LIK_TOL: f64 = 1e-6;
/// Target KKT residual for iterative dual solves.
pub const KKT_TOL: f64 = 1e-6;
