//! Command-line front end: `compvar backtest` and `compvar simulate`.
//!
//! Exit codes: 0 success, 2 usage, 3 data, 4 internal.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dist::DistKind;
use crate::engine::{sweep_kappa, BacktestConfig};
use crate::error::Error;
use crate::io::{
    band_csv, ensemble_csv, kappa_label, read_prices, trajectory_csv, unix_now, write_artifact,
    BacktestFile, EnsembleSummary, ReportRow, RunManifest, SimulationFile, SimulationRow,
    TOOL_NAME, TOOL_VERSION,
};
use crate::sims::{convergence_experiment, ensemble_experiment, SimConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

/// Environment variable consulted when `--seed` is absent.
pub const SEED_ENV: &str = "COMPVAR_SEED";
const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "compvar",
    version,
    about = "Compensated rolling VaR and backtests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Backtest the compensated VaR on a `date,close` price file.
    Backtest(BacktestArgs),
    /// Run the convergence experiment on seeded Gaussian returns.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args, Serialize)]
struct BacktestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    alpha: f64,
    /// Comma-separated list of penalty gains.
    #[arg(long, allow_hyphen_values = true)]
    kappa: String,
    #[arg(long)]
    window: usize,
    /// normal | empirical | t:<dof>
    #[arg(long, default_value = "normal")]
    dist: String,
    /// Bound L for the kappa admissibility warning (default: max |X|).
    #[arg(long)]
    bound: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long, default_value_t = 10_200)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    window: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value = "0,20,50,200", allow_hyphen_values = true)]
    kappa: String,
    #[arg(long, default_value = "normal")]
    dist: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Run the mean-penalized ensemble with this many replications.
    #[arg(long)]
    ensemble: Option<usize>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mean: f64,
    #[arg(long, default_value_t = 0.01)]
    variance: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::AlphaOutOfRange(_)
            | Error::InvalidKappa(_)
            | Error::InvalidDof(_)
            | Error::InvalidConfig(_)
            | Error::TooFewReplications(_)
            | Error::WindowTooShort { .. } => CliError::Usage(msg),
            Error::Io(_) | Error::Json(_) => CliError::Internal(msg),
            e if e.is_data_error() => CliError::Data(msg),
            _ => CliError::Internal(msg),
        }
    }
}

/// Runs the CLI with the given arguments (program name first) and returns
/// the process exit code. Messages go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Backtest(args) => cmd_backtest(&args),
        Command::Simulate(args) => cmd_simulate(&args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn parse_kappas(list: &str) -> Result<Vec<f64>, CliError> {
    let kappas = list
        .split(',')
        .map(|s| {
            let k: f64 = s
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("invalid kappa `{}`", s.trim())))?;
            if !k.is_finite() || k < 0.0 {
                return Err(CliError::Usage("kappa must be nonnegative".into()));
            }
            Ok(k)
        })
        .collect::<Result<Vec<_>, _>>()?;
    if kappas.is_empty() {
        return Err(CliError::Usage("at least one kappa is required".into()));
    }
    Ok(kappas)
}

fn parse_dist(s: &str) -> Result<DistKind, CliError> {
    s.parse().map_err(|e: Error| CliError::Usage(e.to_string()))
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn cmd_backtest(args: &BacktestArgs) -> Result<(), CliError> {
    check_alpha(args.alpha)?;
    let kappas = parse_kappas(&args.kappa)?;
    let dist = parse_dist(&args.dist)?;
    let prices = read_prices(&args.input).map_err(|e| match e {
        Error::Io(io) => CliError::Data(format!("cannot read {}: {io}", args.input.display())),
        other => other.into(),
    })?;
    let series = prices.returns()?;
    log::info!(
        "{} returns from {}, window {}, kappas {:?}",
        series.len(),
        args.input.display(),
        args.window,
        kappas
    );
    let mut cfg = BacktestConfig::new(args.alpha, 0.0, args.window, dist);
    cfg.bound = args.bound;
    let reports = sweep_kappa(&series, &cfg, &kappas)?;

    prepare_out(&args.out)?;
    let now = unix_now();
    let mut artifacts = Vec::new();
    let out = &args.out;
    let io_err = |e: Error| CliError::Internal(e.to_string());
    for report in &reports {
        let label = kappa_label(report.kappa.unwrap_or(0.0));
        write_artifact(
            out,
            &format!("trajectory_{label}.csv"),
            trajectory_csv(report, series.dates()).as_bytes(),
            &mut artifacts,
        )
        .map_err(io_err)?;
    }
    let file = BacktestFile {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        command: "backtest".into(),
        generated_unix: now,
        alpha: args.alpha,
        window: args.window,
        dist: dist.to_string(),
        n_returns: series.len(),
        bound_l: reports[0].bound,
        rows: reports.iter().map(ReportRow::from).collect(),
    };
    write_artifact(out, "report.json", &to_json(&file)?, &mut artifacts).map_err(io_err)?;
    for row in &file.rows {
        eprintln!(
            "kappa {:>6}  alpha_hat {:.4}  LR_uc {:.4}  LR_ind {:.4}  100*VaR {:.2}",
            kappa_label(row.kappa.unwrap_or(0.0)),
            row.alpha_hat,
            row.lr_uc,
            row.lr_ind,
            row.mean_var_x100
        );
    }
    write_manifest(
        out,
        "backtest",
        now,
        args,
        Some(prices.digest),
        None,
        artifacts,
    )
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}=`{v}` is not a u64 seed"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    check_alpha(args.alpha)?;
    let kappas = parse_kappas(&args.kappa)?;
    let dist = parse_dist(&args.dist)?;
    let seed = resolve_seed(args.seed)?;
    if args.n <= args.window + 1 {
        return Err(CliError::Usage(format!(
            "--n {} must exceed --window {} by at least 2",
            args.n, args.window
        )));
    }
    let cfg = SimConfig {
        n_total: args.n,
        window: args.window,
        alpha: args.alpha,
        kappas,
        mean: args.mean,
        variance: args.variance,
        seed,
        replications: args.ensemble.unwrap_or(1),
        dist,
    };
    log::info!(
        "simulating {} draws (seed {seed}), kappas {:?}",
        cfg.n_total,
        cfg.kappas
    );
    let trajectories = convergence_experiment(&cfg)?;
    let ensembles = match args.ensemble {
        Some(_) => cfg
            .kappas
            .iter()
            .map(|&k| ensemble_experiment(&cfg, k))
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };

    prepare_out(&args.out)?;
    let now = unix_now();
    let mut artifacts = Vec::new();
    let out = &args.out;
    let io_err = |e: Error| CliError::Internal(e.to_string());
    for t in &trajectories {
        let label = kappa_label(t.kappa);
        write_artifact(
            out,
            &format!("trajectory_{label}.csv"),
            trajectory_csv(&t.report, None).as_bytes(),
            &mut artifacts,
        )
        .map_err(io_err)?;
        if let Some(band) = &t.band {
            write_artifact(
                out,
                &format!("band_{label}.csv"),
                band_csv(band, cfg.window).as_bytes(),
                &mut artifacts,
            )
            .map_err(io_err)?;
        }
    }
    for e in &ensembles {
        write_artifact(
            out,
            &format!("ensemble_{}.csv", kappa_label(e.kappa)),
            ensemble_csv(e, cfg.window).as_bytes(),
            &mut artifacts,
        )
        .map_err(io_err)?;
    }
    let file = SimulationFile {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        command: "simulate".into(),
        generated_unix: now,
        n_total: cfg.n_total,
        window: cfg.window,
        alpha: cfg.alpha,
        dist: dist.to_string(),
        seed,
        bound_l: trajectories[0].report.bound,
        rows: trajectories
            .iter()
            .map(|t| SimulationRow {
                stats: ReportRow::from(&t.report),
                terminal_deviation: t.terminal_deviation(),
            })
            .collect(),
        ensemble: ensembles.iter().map(EnsembleSummary::from).collect(),
    };
    write_artifact(out, "report.json", &to_json(&file)?, &mut artifacts).map_err(io_err)?;
    for row in &file.rows {
        eprintln!(
            "kappa {:>6}  alpha_hat(T) {:.5}  |alpha_hat - alpha| {:.5}",
            kappa_label(row.stats.kappa.unwrap_or(0.0)),
            row.stats.alpha_hat_weighted,
            row.terminal_deviation
        );
    }
    write_manifest(out, "simulate", now, args, None, Some(seed), artifacts)
}

fn write_manifest<A: Serialize>(
    out: &Path,
    command: &str,
    now: u64,
    args: &A,
    input_digest: Option<String>,
    seed: Option<u64>,
    mut artifacts: Vec<String>,
) -> Result<(), CliError> {
    artifacts.push("manifest.json".into());
    log::info!("wrote {} files to {}", artifacts.len(), out.display());
    let manifest = RunManifest {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        command: command.into(),
        generated_unix: now,
        config: serde_json::to_value(args).map_err(|e| CliError::Internal(e.to_string()))?,
        input_digest,
        seed,
        artifacts,
    };
    fs::write(out.join("manifest.json"), to_json(&manifest)?)
        .map_err(|e| CliError::Internal(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_list_parsing() {
        assert_eq!(parse_kappas("0,1, 2,5").unwrap(), vec![0.0, 1.0, 2.0, 5.0]);
        match parse_kappas("-1") {
            Err(CliError::Usage(m)) => assert_eq!(m, "kappa must be nonnegative"),
            other => panic!("{other:?}"),
        }
        assert!(parse_kappas("1,x").is_err());
        assert!(parse_kappas("inf").is_err());
    }

    #[test]
    fn error_classes() {
        assert_eq!(CliError::from(Error::InvalidKappa(-1.0)).code(), EXIT_USAGE);
        assert_eq!(
            CliError::from(Error::NonMonotoneDates {
                row: 3,
                date: "a".into(),
                previous: "b".into()
            })
            .code(),
            EXIT_DATA
        );
        assert_eq!(
            CliError::from(Error::ZeroVariance { len: 3 }).code(),
            EXIT_DATA
        );
        assert_eq!(CliError::from(Error::ZeroKappa).code(), EXIT_INTERNAL);
    }
}
