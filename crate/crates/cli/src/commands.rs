//! Subcommand implementations. Every command is a pure function of its
//! arguments and input files and writes byte-stable reports.

use std::path::{Path, PathBuf};

use lro_core::{
    band_optimize_scalar, dirichlet_coverage, evaluate_decision, evaluate_lro_measure, ks_band,
    newsvendor_empirical, newsvendor_lro, newsvendor_scarf, newsvendor_true_optimal,
    portfolio_lro, run_backtest, scarf_worst_case_distribution, select_gamma, tv_distance,
    BacktestConfig, DecisionProblem, DofRule, FeasibleSet, GammaChoice, KsQuantileRule,
    LikelihoodSet, MomentConstraints, NewsvendorInstance, ObservationSet, PortfolioInstance,
    SupportBounds, SupportModel,
};

use crate::csv_io;
use crate::json::Json;
use crate::synth::{self, DemandModel};
use crate::CliError;

pub const SCHEMA_VERSION: i64 = 1;

fn artifact_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Parse a dof rule: `support-minus-one`, `observation-count`, or an
/// explicit positive integer.
pub fn parse_dof_rule(s: &str) -> Result<DofRule, CliError> {
    match s {
        "support-minus-one" => Ok(DofRule::SupportMinusOne),
        "observation-count" => Ok(DofRule::ObservationCount),
        other => other
            .parse::<u64>()
            .map(DofRule::Explicit)
            .map_err(|_| CliError::Config(format!("bad dof rule `{other}`"))),
    }
}

fn dof_rule_name(rule: DofRule) -> String {
    match rule {
        DofRule::SupportMinusOne => "support-minus-one".into(),
        DofRule::ObservationCount => "observation-count".into(),
        DofRule::Explicit(k) => format!("{k}"),
    }
}

fn gamma_json(choice: &GammaChoice) -> Json {
    Json::object(vec![
        ("value", Json::Float(choice.gamma)),
        (
            "alpha",
            if choice.alpha.is_finite() { Json::Float(choice.alpha) } else { Json::Null },
        ),
        ("dof", Json::UInt(choice.dof)),
        (
            "basis",
            Json::Str(
                match choice.basis {
                    lro_core::GammaBasis::AsymptoticChiSquare => "asymptotic-chi-square",
                    lro_core::GammaBasis::UserSupplied => "user-supplied",
                }
                .into(),
            ),
        ),
    ])
}

fn resolve_gamma(
    obs: &ObservationSet,
    alpha: f64,
    dof_rule: DofRule,
    gamma_override: Option<f64>,
) -> Result<GammaChoice, CliError> {
    match gamma_override {
        Some(g) => Ok(GammaChoice::user_supplied(g)),
        None => select_gamma(obs, alpha, dof_rule).map_err(CliError::from_core_config),
    }
}

fn write_report(out: Option<&Path>, doc: &Json) -> Result<(), CliError> {
    let rendered = doc.render();
    match out {
        Some(path) => std::fs::write(path, rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn pct_string(value: f64, best: f64) -> String {
    if best == 0.0 {
        return if value == 0.0 { "+0.00%".into() } else { "n/a".into() };
    }
    format!("{:+.2}%", (value - best) / best * 100.0)
}

// ---------------------------------------------------------------------------
// newsvendor
// ---------------------------------------------------------------------------

pub struct NewsvendorCmd {
    pub demand_csv: Option<PathBuf>,
    pub synthetic: Option<String>,
    pub bounds: (i64, i64),
    pub n: usize,
    pub seed: u64,
    pub b: f64,
    pub h: f64,
    pub alpha: f64,
    pub dof_rule: DofRule,
    pub gamma_override: Option<f64>,
    pub out: Option<PathBuf>,
    pub dist_out: Option<PathBuf>,
}

pub fn cmd_newsvendor(cmd: &NewsvendorCmd) -> Result<Json, CliError> {
    let threads = crate::worker_threads()?;
    let (lo, hi) = cmd.bounds;
    if lo > hi {
        return Err(CliError::Config("bounds lo > hi".into()));
    }

    // Observations plus, when synthetic, the exact truncated pmf.
    let (instance, model, synthetic_desc) = match (&cmd.demand_csv, &cmd.synthetic) {
        (Some(path), None) => {
            let obs = csv_io::read_observations(path)?;
            let support = obs.scalar_support().map_err(CliError::from_core_config)?;
            let mut counts = vec![0u64; (hi - lo + 1) as usize];
            for (v, &c) in support.iter().zip(obs.counts()) {
                let k = *v as i64;
                if *v != k as f64 || k < lo || k > hi {
                    return Err(CliError::Config(format!(
                        "demand value {v} is not an integer inside bounds [{lo}, {hi}]"
                    )));
                }
                counts[(k - lo) as usize] += c;
            }
            let inst = NewsvendorInstance::new(cmd.b, cmd.h, (lo..=hi).collect(), counts)
                .map_err(CliError::from_core_config)?;
            (inst, None, None)
        }
        (None, Some(spec)) => {
            let model = DemandModel::parse(spec)?;
            let samples = synth::sample_demands(model, lo, hi, cmd.n, cmd.seed)?;
            let inst = NewsvendorInstance::from_samples(cmd.b, cmd.h, lo, hi, &samples)
                .map_err(CliError::from_core_config)?;
            (inst, Some(model), Some(model.describe()))
        }
        _ => {
            return Err(CliError::Config(
                "provide exactly one of --demand-csv or --synthetic".into(),
            ))
        }
    };

    let obs = instance.observations().clone();
    let (mean, var) = instance.sample_moments();
    let sigma = var.sqrt();
    let gamma = resolve_gamma(&obs, cmd.alpha, cmd.dof_rule, cmd.gamma_override)?;
    let set = LikelihoodSet::new(obs.clone(), gamma.gamma).map_err(CliError::from_core_config)?;

    // Decisions.
    let lro = newsvendor_lro(&instance, gamma.gamma, None).map_err(CliError::from_core)?;
    let lro_m = newsvendor_lro(
        &instance,
        gamma.gamma,
        Some(MomentConstraints::SampleMeanAndVariance),
    )
    .map_err(CliError::from_core)?;
    let scarf_exact =
        newsvendor_scarf(mean, sigma, cmd.b, cmd.h).map_err(CliError::from_core_config)?;
    let scarf_decision = libm::round(scarf_exact).clamp(lo as f64, hi as f64) as i64;
    let empirical = newsvendor_empirical(&instance);
    let pmf = model.map(|m| synth::true_pmf(m, lo, hi));
    let underlying = match &pmf {
        Some(p) => Some(newsvendor_true_optimal(&instance, p).map_err(CliError::from_core_config)?),
        None => None,
    };

    let mut methods: Vec<(&str, i64)> = vec![
        ("lro", lro.decision),
        ("lro_moments", lro_m.decision),
        ("scarf", scarf_decision),
        ("empirical", empirical),
    ];
    if let Some(u) = underlying {
        methods.push(("underlying", u));
    }

    // Evaluation columns.
    let mut true_costs: Vec<Option<f64>> = Vec::new();
    let mut lro_costs: Vec<f64> = Vec::new();
    for &(_, x) in &methods {
        true_costs.push(match &pmf {
            Some(p) => Some(evaluate_decision(x, p, &instance).map_err(CliError::from_core_config)?),
            None => None,
        });
        lro_costs.push(evaluate_lro_measure(x, &set, &instance).map_err(CliError::from_core)?);
    }
    let best_true = true_costs
        .iter()
        .flatten()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let best_lro = lro_costs.iter().cloned().fold(f64::INFINITY, f64::min);

    // Worst-case distributions for the plot CSV and the TV contrast.
    let empirical_hist = obs.mle();
    let scarf_points = scarf_worst_case_distribution(mean, sigma, scarf_decision as f64);
    let scarf_binned = lro_core::newsvendor::bin_to_grid(&scarf_points, instance.grid());
    let tv_lro = tv_distance(&lro.distribution, &empirical_hist);
    let tv_lro_m = tv_distance(&lro_m.distribution, &empirical_hist);
    let tv_scarf = tv_distance(&scarf_binned, &empirical_hist);

    if let Some(path) = &cmd.dist_out {
        csv_io::write_worst_case_distributions(
            instance.grid(),
            &lro.distribution,
            Some(&lro_m.distribution),
            &scarf_binned,
            &empirical_hist,
            path,
        )?;
    }

    let method_rows: Vec<Json> = methods
        .iter()
        .enumerate()
        .map(|(i, (name, x))| {
            let mut fields = vec![
                ("method", Json::Str((*name).into())),
                ("decision", Json::Int(*x)),
            ];
            match true_costs[i] {
                Some(c) => {
                    fields.push(("true_cost", Json::Float(c)));
                    fields.push(("true_cost_pct", Json::Str(pct_string(c, best_true))));
                }
                None => {
                    fields.push(("true_cost", Json::Null));
                    fields.push(("true_cost_pct", Json::Null));
                }
            }
            fields.push(("lro_cost", Json::Float(lro_costs[i])));
            fields.push(("lro_cost_pct", Json::Str(pct_string(lro_costs[i], best_lro))));
            Json::object(fields)
        })
        .collect();

    let doc = Json::object(vec![
        ("schema", Json::Int(SCHEMA_VERSION)),
        ("command", Json::Str("newsvendor".into())),
        ("version", Json::Str(artifact_version().into())),
        (
            "config",
            Json::object(vec![
                (
                    "demand_csv",
                    cmd.demand_csv
                        .as_ref()
                        .map(|p| Json::Str(p.display().to_string()))
                        .unwrap_or(Json::Null),
                ),
                (
                    "synthetic",
                    synthetic_desc.map(Json::Str).unwrap_or(Json::Null),
                ),
                ("bounds", Json::Array(vec![Json::Int(lo), Json::Int(hi)])),
                ("n", Json::UInt(cmd.n as u64)),
                ("seed", Json::UInt(cmd.seed)),
                ("b", Json::Float(cmd.b)),
                ("h", Json::Float(cmd.h)),
                ("alpha", Json::Float(cmd.alpha)),
                ("dof_rule", Json::Str(dof_rule_name(cmd.dof_rule))),
                (
                    "gamma_override",
                    cmd.gamma_override.map(Json::Float).unwrap_or(Json::Null),
                ),
                ("threads", Json::UInt(threads)),
            ]),
        ),
        (
            "sample",
            Json::object(vec![
                ("observations", Json::UInt(obs.total())),
                ("mean", Json::Float(mean)),
                ("std", Json::Float(sigma)),
                (
                    "max_log_likelihood",
                    Json::Float(lro_core::obs::max_log_likelihood(&obs)),
                ),
            ]),
        ),
        ("gamma", gamma_json(&gamma)),
        ("scarf_exact", Json::Float(scarf_exact)),
        ("methods", Json::Array(method_rows)),
        (
            "tv_distance_to_empirical",
            Json::object(vec![
                ("lro", Json::Float(tv_lro)),
                ("lro_moments", Json::Float(tv_lro_m)),
                ("scarf", Json::Float(tv_scarf)),
            ]),
        ),
        (
            "worst_case_distributions_csv",
            cmd.dist_out
                .as_ref()
                .map(|p| Json::Str(p.display().to_string()))
                .unwrap_or(Json::Null),
        ),
    ]);
    write_report(cmd.out.as_deref(), &doc)?;
    Ok(doc)
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

pub struct CalibrateCmd {
    pub observations_csv: PathBuf,
    pub alpha: f64,
    pub dof_rule: DofRule,
    pub samples: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

pub fn cmd_calibrate(cmd: &CalibrateCmd) -> Result<Json, CliError> {
    let threads = crate::worker_threads()?;
    let obs = csv_io::read_observations(&cmd.observations_csv)?;
    let gamma =
        select_gamma(&obs, cmd.alpha, cmd.dof_rule).map_err(CliError::from_core_config)?;
    let coverage = dirichlet_coverage(&obs, gamma.gamma, cmd.samples, cmd.seed)
        .map_err(CliError::from_core_config)?;
    let mc_error = 3.0 * (coverage * (1.0 - coverage) / cmd.samples as f64).sqrt();
    let doc = Json::object(vec![
        ("schema", Json::Int(SCHEMA_VERSION)),
        ("command", Json::Str("calibrate".into())),
        ("version", Json::Str(artifact_version().into())),
        (
            "config",
            Json::object(vec![
                (
                    "observations_csv",
                    Json::Str(cmd.observations_csv.display().to_string()),
                ),
                ("alpha", Json::Float(cmd.alpha)),
                ("dof_rule", Json::Str(dof_rule_name(cmd.dof_rule))),
                ("samples", Json::UInt(cmd.samples)),
                ("seed", Json::UInt(cmd.seed)),
                ("threads", Json::UInt(threads)),
            ]),
        ),
        (
            "max_log_likelihood",
            Json::Float(lro_core::obs::max_log_likelihood(&obs)),
        ),
        ("gamma", gamma_json(&gamma)),
        (
            "coverage",
            Json::object(vec![
                ("estimate", Json::Float(coverage)),
                ("samples", Json::UInt(cmd.samples)),
                ("mc_error_3sigma", Json::Float(mc_error)),
            ]),
        ),
    ]);
    write_report(cmd.out.as_deref(), &doc)?;
    Ok(doc)
}

// ---------------------------------------------------------------------------
// band
// ---------------------------------------------------------------------------

pub struct BandCmd {
    pub samples_csv: PathBuf,
    pub alpha: f64,
    pub ks_d: Option<f64>,
    pub bounds: (f64, f64),
    pub b: f64,
    pub h: f64,
    pub band_out: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

pub fn cmd_band(cmd: &BandCmd) -> Result<Json, CliError> {
    let threads = crate::worker_threads()?;
    let mut samples = csv_io::read_samples(&cmd.samples_csv)?;
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for w in samples.windows(2) {
        if w[0] == w[1] {
            return Err(CliError::Config(format!(
                "duplicate sample value {}; perturb ties before calling",
                w[0]
            )));
        }
    }
    let rule = match cmd.ks_d {
        Some(d) => KsQuantileRule::User(d),
        None => KsQuantileRule::Asymptotic,
    };
    let band = ks_band(&samples, cmd.alpha, rule).map_err(CliError::from_core)?;
    if let Some(path) = &cmd.band_out {
        csv_io::write_band(&band, path)?;
    }
    let bounds = SupportBounds::new(cmd.bounds.0, cmd.bounds.1).map_err(CliError::from_core_config)?;
    if bounds.lo > samples[0] || bounds.hi < samples[samples.len() - 1] {
        return Err(CliError::Config(
            "support bounds must contain all samples".into(),
        ));
    }
    let (b, h) = (cmd.b, cmd.h);
    if !(b > 0.0 && h > 0.0) {
        return Err(CliError::Config("costs must be positive".into()));
    }
    // Reward = -cost, concave in the scenario.
    let problem = DecisionProblem::new(
        Box::new(move |x: &[f64], xi: &[f64]| {
            -(b * (xi[0] - x[0]).max(0.0) + h * (x[0] - xi[0]).max(0.0))
        }),
        FeasibleSet::Interval { lo: bounds.lo, hi: bounds.hi, integer: false },
    )
    .map_err(CliError::from_core_config)?;
    let res = band_optimize_scalar(&problem, &band, bounds).map_err(CliError::from_core)?;
    let d_used = match rule {
        KsQuantileRule::User(d) => d,
        KsQuantileRule::Asymptotic => {
            ((2.0 / cmd.alpha).ln() / (2.0 * samples.len() as f64)).sqrt()
        }
    };
    let doc = Json::object(vec![
        ("schema", Json::Int(SCHEMA_VERSION)),
        ("command", Json::Str("band".into())),
        ("version", Json::Str(artifact_version().into())),
        (
            "config",
            Json::object(vec![
                ("samples_csv", Json::Str(cmd.samples_csv.display().to_string())),
                ("alpha", Json::Float(cmd.alpha)),
                (
                    "ks_d",
                    cmd.ks_d.map(Json::Float).unwrap_or(Json::Null),
                ),
                (
                    "bounds",
                    Json::Array(vec![Json::Float(bounds.lo), Json::Float(bounds.hi)]),
                ),
                ("b", Json::Float(cmd.b)),
                ("h", Json::Float(cmd.h)),
                ("threads", Json::UInt(threads)),
            ]),
        ),
        (
            "band",
            Json::object(vec![
                ("n", Json::UInt(samples.len() as u64)),
                ("d_used", Json::Float(d_used)),
                (
                    "rule",
                    Json::Str(match rule {
                        KsQuantileRule::Asymptotic => "asymptotic".into(),
                        KsQuantileRule::User(_) => "user".into(),
                    }),
                ),
            ]),
        ),
        ("decision", Json::Float(res.decision[0])),
        ("worst_case_cost", Json::Float(-res.value)),
        (
            "band_csv",
            cmd.band_out
                .as_ref()
                .map(|p| Json::Str(p.display().to_string()))
                .unwrap_or(Json::Null),
        ),
    ]);
    write_report(cmd.out.as_deref(), &doc)?;
    Ok(doc)
}

// ---------------------------------------------------------------------------
// portfolio / backtest
// ---------------------------------------------------------------------------

pub struct PortfolioCmd {
    pub returns_csv: PathBuf,
    pub alpha: f64,
    pub dof_rule: DofRule,
    pub gamma_override: Option<f64>,
    pub support_widen: f64,
    pub out: Option<PathBuf>,
}

pub fn cmd_portfolio(cmd: &PortfolioCmd) -> Result<Json, CliError> {
    let threads = crate::worker_threads()?;
    let (names, rows) = csv_io::read_returns(&cmd.returns_csv)?;
    let support = SupportModel::box_from_data(&rows, cmd.support_widen)
        .map_err(CliError::from_core_config)?;
    let probe = PortfolioInstance::new(&rows, support.clone(), 0.0)
        .map_err(CliError::from_core_config)?;
    let gamma =
        resolve_gamma(probe.observations(), cmd.alpha, cmd.dof_rule, cmd.gamma_override)?;
    let inst = PortfolioInstance::new(&rows, support.clone(), gamma.gamma)
        .map_err(CliError::from_core_config)?;
    let res = portfolio_lro(&inst).map_err(CliError::from_core)?;
    let (lo, hi) = match &support {
        SupportModel::Box { lo, hi } => (lo.clone(), hi.clone()),
        SupportModel::Ball { .. } => unreachable!("box_from_data returns a box"),
    };
    let doc = Json::object(vec![
        ("schema", Json::Int(SCHEMA_VERSION)),
        ("command", Json::Str("portfolio".into())),
        ("version", Json::Str(artifact_version().into())),
        (
            "config",
            Json::object(vec![
                ("returns_csv", Json::Str(cmd.returns_csv.display().to_string())),
                ("alpha", Json::Float(cmd.alpha)),
                ("dof_rule", Json::Str(dof_rule_name(cmd.dof_rule))),
                (
                    "gamma_override",
                    cmd.gamma_override.map(Json::Float).unwrap_or(Json::Null),
                ),
                ("support_widen", Json::Float(cmd.support_widen)),
                ("threads", Json::UInt(threads)),
            ]),
        ),
        ("assets", Json::Array(names.iter().map(|n| Json::Str(n.clone())).collect())),
        ("days", Json::UInt(rows.len() as u64)),
        ("gamma", gamma_json(&gamma)),
        (
            "support_box",
            Json::object(vec![
                ("lo", Json::Array(lo.iter().map(|&v| Json::Float(v)).collect())),
                ("hi", Json::Array(hi.iter().map(|&v| Json::Float(v)).collect())),
            ]),
        ),
        (
            "weights",
            Json::Array(res.decision.iter().map(|&w| Json::Float(w)).collect()),
        ),
        ("worst_case_expected_return", Json::Float(res.value)),
        ("iterations", Json::UInt(res.iterations as u64)),
        ("optimality_gap", Json::Float(res.gap)),
    ]);
    write_report(cmd.out.as_deref(), &doc)?;
    Ok(doc)
}

pub struct BacktestCmd {
    pub returns_csv: PathBuf,
    pub window: usize,
    pub alpha: f64,
    pub dof_rule: DofRule,
    pub support_widen: f64,
    pub out: Option<PathBuf>,
}

pub fn cmd_backtest(cmd: &BacktestCmd) -> Result<Json, CliError> {
    let threads = crate::worker_threads()?;
    if cmd.window < 2 {
        return Err(CliError::Config("window must be >= 2".into()));
    }
    let (names, rows) = csv_io::read_returns(&cmd.returns_csv)?;
    let config = BacktestConfig {
        window: cmd.window,
        alpha: cmd.alpha,
        dof_rule: cmd.dof_rule,
        support_widen: cmd.support_widen,
        gamma_override: None,
        usage_threshold: 1e-4,
    };
    let report = run_backtest(&rows, &config).map_err(CliError::from_core)?;
    let strategies: Vec<Json> = report
        .stats
        .iter()
        .map(|s| {
            Json::object(vec![
                ("strategy", Json::Str(s.strategy.name().into())),
                ("cumulative_return", Json::Float(s.cumulative_return)),
                ("mean_daily", Json::Float(s.mean_daily)),
                ("std_daily", Json::Float(s.std_daily)),
                (
                    "wins_vs",
                    Json::Object(
                        s.wins_vs
                            .iter()
                            .map(|(other, w)| (other.name().to_string(), Json::UInt(*w)))
                            .collect(),
                    ),
                ),
                (
                    "diversification_histogram",
                    Json::Array(
                        s.diversification_histogram
                            .iter()
                            .map(|&c| Json::UInt(c))
                            .collect(),
                    ),
                ),
            ])
        })
        .collect();
    let doc = Json::object(vec![
        ("schema", Json::Int(SCHEMA_VERSION)),
        ("command", Json::Str("backtest".into())),
        ("version", Json::Str(artifact_version().into())),
        (
            "config",
            Json::object(vec![
                ("returns_csv", Json::Str(cmd.returns_csv.display().to_string())),
                ("window", Json::UInt(cmd.window as u64)),
                ("alpha", Json::Float(cmd.alpha)),
                ("dof_rule", Json::Str(dof_rule_name(cmd.dof_rule))),
                ("support_widen", Json::Float(cmd.support_widen)),
                ("threads", Json::UInt(threads)),
            ]),
        ),
        ("assets", Json::Array(names.iter().map(|n| Json::Str(n.clone())).collect())),
        ("days_evaluated", Json::UInt(report.days_evaluated as u64)),
        ("strategies", Json::Array(strategies)),
    ]);
    write_report(cmd.out.as_deref(), &doc)?;
    Ok(doc)
}
