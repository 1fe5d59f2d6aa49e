//! Rolling-window backtest of the portfolio strategies.
//!
//! Each evaluation day re-optimizes on the trailing window: LRO (this
//! crate's solver with a data-derived box support), SS (all capital on the
//! best trailing-mean stock), and EQ (equal weights). Days after the warm-up
//! are mutually independent; the loop below runs them sequentially for
//! deterministic aggregation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::calib::{select_gamma, DofRule};
use crate::error::{Error, Result};
use crate::math;
use crate::portfolio::{portfolio_lro, PortfolioInstance, SupportModel};

/// Strategies compared in the backtest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Lro,
    SingleStock,
    EqualWeights,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Lro => "LRO",
            Strategy::SingleStock => "SS",
            Strategy::EqualWeights => "EQ",
        }
    }

    pub const ALL: [Strategy; 3] = [Strategy::Lro, Strategy::SingleStock, Strategy::EqualWeights];
}

/// Backtest parameters.
#[derive(Debug, Clone)]
pub struct BacktestConfig {
    /// Trailing window length in days.
    pub window: usize,
    /// Confidence parameter for the gamma calibration.
    pub alpha: f64,
    /// Degrees-of-freedom rule (the portfolio experiments use the
    /// observation count).
    pub dof_rule: DofRule,
    /// Box-support widening factor applied to the window's range.
    pub support_widen: f64,
    /// Override the calibrated gamma when set.
    pub gamma_override: Option<f64>,
    /// Weight threshold above which an asset counts as used.
    pub usage_threshold: f64,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            window: 30,
            alpha: 0.05,
            dof_rule: DofRule::ObservationCount,
            support_widen: 0.5,
            gamma_override: None,
            usage_threshold: 1e-4,
        }
    }
}

/// Per-strategy backtest outcome.
#[derive(Debug, Clone)]
pub struct StrategyStats {
    pub strategy: Strategy,
    /// `prod (1 + r_t) - 1` over the evaluation days.
    pub cumulative_return: f64,
    pub mean_daily: f64,
    /// Sample standard deviation (n - 1 denominator) of daily returns.
    pub std_daily: f64,
    /// Days on which this strategy's daily return strictly beats the other.
    pub wins_vs: Vec<(Strategy, u64)>,
    /// `histogram[k]` = number of days the strategy used exactly `k + 1`
    /// assets (weight above the usage threshold).
    pub diversification_histogram: Vec<u64>,
}

/// Full backtest report.
#[derive(Debug, Clone)]
pub struct BacktestReport {
    pub days_evaluated: usize,
    pub assets: usize,
    pub window: usize,
    pub stats: Vec<StrategyStats>,
    /// Daily weights of the LRO strategy (for feasibility audits).
    pub lro_weights: Vec<Vec<f64>>,
}

fn mean_std(returns: &[f64]) -> (f64, f64) {
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    if returns.len() < 2 {
        return (mean, 0.0);
    }
    let var = returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0);
    (mean, math::sqrt(var))
}

/// Run the rolling backtest over a full return matrix (rows = days).
pub fn run_backtest(returns: &[Vec<f64>], config: &BacktestConfig) -> Result<BacktestReport> {
    if config.window < 2 {
        return Err(Error::InvalidInput("window must be >= 2".into()));
    }
    if returns.len() < config.window + 1 {
        return Err(Error::InvalidInput(format!(
            "need at least window + 1 = {} rows, got {}",
            config.window + 1,
            returns.len()
        )));
    }
    let d = returns[0].len();
    if d == 0 || returns.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidInput("return rows must be nonempty and rectangular".into()));
    }

    let days = returns.len() - config.window;
    let mut daily: Vec<Vec<f64>> = vec![Vec::with_capacity(days); Strategy::ALL.len()];
    let mut usage: Vec<Vec<u64>> = vec![vec![0; d]; Strategy::ALL.len()];
    let mut lro_weights = Vec::with_capacity(days);

    for t in config.window..returns.len() {
        let train = &returns[t - config.window..t];
        let today = &returns[t];

        for (s_idx, strategy) in Strategy::ALL.iter().enumerate() {
            let weights = match strategy {
                Strategy::Lro => {
                    let support = SupportModel::box_from_data(train, config.support_widen)?;
                    let gamma = match config.gamma_override {
                        Some(g) => g,
                        None => {
                            // Calibrate on the merged observation set so the
                            // threshold stays attainable when rows repeat.
                            let inst_probe =
                                PortfolioInstance::new(train, support.clone(), 0.0)?;
                            select_gamma(inst_probe.observations(), config.alpha, config.dof_rule)?
                                .gamma
                        }
                    };
                    let inst = PortfolioInstance::new(train, support, gamma)?;
                    portfolio_lro(&inst)?.decision
                }
                Strategy::SingleStock => {
                    let mut best = 0usize;
                    let mut best_mean = f64::NEG_INFINITY;
                    for j in 0..d {
                        let m: f64 =
                            train.iter().map(|r| r[j]).sum::<f64>() / config.window as f64;
                        if m > best_mean {
                            best_mean = m;
                            best = j;
                        }
                    }
                    let mut w = vec![0.0; d];
                    w[best] = 1.0;
                    w
                }
                Strategy::EqualWeights => vec![1.0 / d as f64; d],
            };
            let r: f64 = weights.iter().zip(today).map(|(w, r)| w * r).sum();
            daily[s_idx].push(r);
            let used = weights.iter().filter(|&&w| w > config.usage_threshold).count();
            usage[s_idx][used.saturating_sub(1).min(d - 1)] += 1;
            if *strategy == Strategy::Lro {
                lro_weights.push(weights);
            }
        }
    }

    let mut stats = Vec::with_capacity(Strategy::ALL.len());
    for (s_idx, strategy) in Strategy::ALL.iter().enumerate() {
        let series = &daily[s_idx];
        let cumulative = series.iter().fold(1.0, |acc, r| acc * (1.0 + r)) - 1.0;
        let (mean, std) = mean_std(series);
        let mut wins = Vec::new();
        for (o_idx, other) in Strategy::ALL.iter().enumerate() {
            if o_idx == s_idx {
                continue;
            }
            let w = series
                .iter()
                .zip(&daily[o_idx])
                .filter(|(a, b)| a > b)
                .count() as u64;
            wins.push((*other, w));
        }
        stats.push(StrategyStats {
            strategy: *strategy,
            cumulative_return: cumulative,
            mean_daily: mean,
            std_daily: std,
            wins_vs: wins,
            diversification_histogram: usage[s_idx].clone(),
        });
    }

    Ok(BacktestReport { days_evaluated: days, assets: d, window: config.window, stats, lro_weights })
}
