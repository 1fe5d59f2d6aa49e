//! `lro` — likelihood robust optimization toolkit.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lro_cli::commands::{self, parse_dof_rule};
use lro_cli::CliError;

#[derive(Parser)]
#[command(
    name = "lro",
    version,
    about = "Likelihood robust optimization: newsvendor, portfolio, calibration, CDF bands"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a newsvendor instance with all comparison baselines.
    Newsvendor(NewsvendorArgs),
    /// One-shot portfolio decision from a returns CSV.
    Portfolio(PortfolioArgs),
    /// Rolling-window backtest of LRO vs SS vs EQ.
    Backtest(BacktestArgs),
    /// Calibrate the likelihood threshold and validate its coverage.
    Calibrate(CalibrateArgs),
    /// Build a KS confidence band and solve the band-robust newsvendor.
    Band(BandArgs),
}

#[derive(Args)]
struct NewsvendorArgs {
    /// Observation CSV (`value,count`); mutually exclusive with --synthetic.
    #[arg(long)]
    demand_csv: Option<PathBuf>,
    /// Synthetic demand spec: trunc-normal:MU,SIGMA or trunc-exp:RATE.
    #[arg(long)]
    synthetic: Option<String>,
    /// Demand grid bounds LO,HI (inclusive integers).
    #[arg(long, value_parser = parse_i64_pair, allow_hyphen_values = true)]
    bounds: (i64, i64),
    /// Synthetic sample size.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// RNG seed for synthetic draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Underage (lost-sale) cost per unit.
    #[arg(long)]
    b: f64,
    /// Overage (holding) cost per unit.
    #[arg(long)]
    h: f64,
    /// Confidence parameter for the gamma calibration.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Degrees-of-freedom rule: support-minus-one | observation-count | K.
    #[arg(long, default_value = "support-minus-one")]
    dof_rule: String,
    /// Override the calibrated gamma.
    #[arg(long)]
    gamma: Option<f64>,
    /// Report path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plot-ready CSV of the worst-case distributions.
    #[arg(long)]
    dist_out: Option<PathBuf>,
}

#[derive(Args)]
struct PortfolioArgs {
    /// Returns CSV: header of asset names, one row per day.
    #[arg(long)]
    returns_csv: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Degrees-of-freedom rule (portfolio default: observation-count).
    #[arg(long, default_value = "observation-count")]
    dof_rule: String,
    #[arg(long)]
    gamma: Option<f64>,
    /// Box-support widening factor on the data range.
    #[arg(long, default_value_t = 0.5)]
    support_widen: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BacktestArgs {
    #[arg(long)]
    returns_csv: PathBuf,
    /// Trailing window length in days.
    #[arg(long, default_value_t = 30)]
    window: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "observation-count")]
    dof_rule: String,
    #[arg(long, default_value_t = 0.5)]
    support_widen: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Observation CSV (`value,count`).
    #[arg(long)]
    observations_csv: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "support-minus-one")]
    dof_rule: String,
    /// Monte-Carlo sample count for the coverage check.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BandArgs {
    /// Sample CSV (header `value`, one sample per row, distinct values).
    #[arg(long)]
    samples_csv: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Exact small-sample KS quantile (default: asymptotic formula).
    #[arg(long)]
    ks_d: Option<f64>,
    /// Scenario support bounds LO,HI replacing the infinite end knots.
    #[arg(long, value_parser = parse_f64_pair, allow_hyphen_values = true)]
    bounds: (f64, f64),
    #[arg(long)]
    b: f64,
    #[arg(long)]
    h: f64,
    /// Band CSV output (`x,lower,upper`).
    #[arg(long)]
    band_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_i64_pair(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    Ok((
        a.trim().parse().map_err(|_| format!("bad integer `{a}`"))?,
        b.trim().parse().map_err(|_| format!("bad integer `{b}`"))?,
    ))
}

fn parse_f64_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    Ok((
        a.trim().parse().map_err(|_| format!("bad number `{a}`"))?,
        b.trim().parse().map_err(|_| format!("bad number `{b}`"))?,
    ))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Newsvendor(a) => {
            commands::cmd_newsvendor(&commands::NewsvendorCmd {
                demand_csv: a.demand_csv,
                synthetic: a.synthetic,
                bounds: a.bounds,
                n: a.n,
                seed: a.seed,
                b: a.b,
                h: a.h,
                alpha: a.alpha,
                dof_rule: parse_dof_rule(&a.dof_rule)?,
                gamma_override: a.gamma,
                out: a.out,
                dist_out: a.dist_out,
            })?;
        }
        Command::Portfolio(a) => {
            commands::cmd_portfolio(&commands::PortfolioCmd {
                returns_csv: a.returns_csv,
                alpha: a.alpha,
                dof_rule: parse_dof_rule(&a.dof_rule)?,
                gamma_override: a.gamma,
                support_widen: a.support_widen,
                out: a.out,
            })?;
        }
        Command::Backtest(a) => {
            commands::cmd_backtest(&commands::BacktestCmd {
                returns_csv: a.returns_csv,
                window: a.window,
                alpha: a.alpha,
                dof_rule: parse_dof_rule(&a.dof_rule)?,
                support_widen: a.support_widen,
                out: a.out,
            })?;
        }
        Command::Calibrate(a) => {
            commands::cmd_calibrate(&commands::CalibrateCmd {
                observations_csv: a.observations_csv,
                alpha: a.alpha,
                dof_rule: parse_dof_rule(&a.dof_rule)?,
                samples: a.samples,
                seed: a.seed,
                out: a.out,
            })?;
        }
        Command::Band(a) => {
            commands::cmd_band(&commands::BandCmd {
                samples_csv: a.samples_csv,
                alpha: a.alpha,
                ks_d: a.ks_d,
                bounds: a.bounds,
                b: a.b,
                h: a.h,
                band_out: a.band_out,
                out: a.out,
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
