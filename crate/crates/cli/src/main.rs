//! Command-line entry point wiring ingestion, features, discretization,
//! grid search, validation and reporting.
//!
//! Exit codes: 0 success, 1 experiment failure, 2 usage or input error.

mod artifacts;
mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use trendcast::discretize::{discretize, write_signs_csv};
use trendcast::experiment::{
    emit_report, render_markdown, run_validation, ExperimentConfig, Mode, Report,
};
use trendcast::indicators::{compute_features, write_features_csv};
use trendcast::market_data::{load_csv, PriceSeries};

use artifacts::{load_artifacts, write_artifacts, write_validation_outputs};
use config::{CliError, RunConfig, RunMode};

#[derive(Parser)]
#[command(
    name = "trendcast",
    version,
    about = "Price-direction forecasting lab: indicators, trend discretization, classifier grids, validation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Input OHLC CSV (columns: date,high,low,close[,open,volume]).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Hold-out OHLC CSV for the 10x10 validation protocol.
    #[arg(long)]
    validation: Option<PathBuf>,
    /// Feature space: continuous, discrete, or both.
    #[arg(long, value_enum)]
    mode: Option<RunMode>,
    /// Grid preset name (smoke, paper-full) or path to a grid JSON file.
    #[arg(long)]
    grid: Option<String>,
    /// Chronological train fraction in (0, 1).
    #[arg(long = "train-frac")]
    train_frac: Option<f64>,
    /// Master seed; fixes every trained weight and report byte.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for reports, CSVs and model artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker cap for grid training (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Run the untruncated published MLP grid (paper-full preset only).
    #[arg(long)]
    full: bool,
    /// JSON config file; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Simple moving average window.
    #[arg(long = "ma-window")]
    ma_window: Option<usize>,
    /// Weighted moving average window.
    #[arg(long = "wma-window")]
    wma_window: Option<usize>,
    /// Shared window for momentum, K%, D%, RSI and LW.
    #[arg(long = "n-window")]
    n_window: Option<usize>,
    /// Short EMA period inside MACD.
    #[arg(long = "ema-short")]
    ema_short: Option<usize>,
    /// Long EMA period inside MACD.
    #[arg(long = "ema-long")]
    ema_long: Option<usize>,
    /// MACD signal smoothing period.
    #[arg(long = "macd-signal")]
    macd_signal: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute indicator features (and, in discrete/both mode, signs).
    Features(CommonArgs),
    /// Run the full experiment: grids, best models, validation, report.
    Run(CommonArgs),
    /// Re-run the validation protocol against stored model artifacts.
    Validate(CommonArgs),
    /// Re-render the human-readable report from report.json.
    Report(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Features(args) => cmd_features(args),
        Command::Run(args) => cmd_run(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn load_series(path: &Path) -> Result<PriceSeries, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::usage(format!("cannot open '{}': {e}", path.display())))?;
    load_csv(file).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn cmd_features(args: CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&args)?;
    let input = cfg.require_input()?;
    let series = load_series(&input)?;
    let features = compute_features(&series, &cfg.indicator)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let warmup = cfg.indicator.warmup();
    println!(
        "{} bars in, {} feature rows out ({} warmup rows dropped)",
        series.len(),
        features.len(),
        warmup
    );

    fs::create_dir_all(&cfg.out)?;
    let features_path = cfg.out.join("features.csv");
    let mut out = Vec::new();
    write_features_csv(&features, &mut out).map_err(|e| CliError::run(e.to_string()))?;
    fs::write(&features_path, out)?;
    println!("wrote {}", features_path.display());

    if cfg.mode.includes_discrete() {
        let closes: Vec<f64> = features
            .dates
            .iter()
            .map(|d| series.bars()[series.position(*d).expect("dates from series")].close)
            .collect();
        let signs =
            discretize(&features, &closes).map_err(|e| CliError::usage(e.to_string()))?;
        let signs_path = cfg.out.join("signs.csv");
        let mut out = Vec::new();
        write_signs_csv(&signs, &mut out).map_err(|e| CliError::run(e.to_string()))?;
        fs::write(&signs_path, out)?;
        println!("wrote {}", signs_path.display());
    }
    Ok(())
}

fn cmd_run(args: CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&args)?;
    let input = cfg.require_input()?;
    let series = load_series(&input)?;
    let validation_series = match &cfg.validation {
        Some(path) => Some(load_series(path)?),
        None => None,
    };

    let experiment = ExperimentConfig {
        indicator: cfg.indicator.clone(),
        train_fraction: cfg.train_frac,
        master_seed: cfg.seed,
        modes: cfg.mode.modes(),
        grids: cfg.grids()?,
        grid_label: cfg.grid.clone(),
        jobs: cfg.jobs,
    };
    let output = trendcast::experiment::run_experiment(
        &series,
        validation_series.as_ref(),
        &experiment,
    )
    .map_err(CliError::from_experiment)?;

    let (json_path, md_path) =
        emit_report(&output.report, &cfg.out).map_err(|e| CliError::run(e.to_string()))?;
    write_artifacts(&cfg, &output)?;
    println!("wrote {}", json_path.display());
    println!("wrote {}", md_path.display());
    for section in &output.report.comparison {
        let best = section
            .entries
            .iter()
            .filter(|e| !e.is_benchmark)
            .max_by(|a, b| a.f_weighted.total_cmp(&b.f_weighted));
        if let Some(best) = best {
            println!(
                "{}: best family {} (accuracy {:.4}, weighted F {:.4}, baseline {:.4})",
                section.mode,
                best.label,
                best.accuracy,
                best.f_weighted,
                section.majority_baseline
            );
        }
    }
    Ok(())
}

fn cmd_validate(args: CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&args)?;
    let validation_path = cfg.validation.clone().ok_or_else(|| {
        CliError::usage("validate requires --validation <csv> (or a config file entry)")
    })?;
    let stored = load_artifacts(&cfg.out)?;
    let series = load_series(&validation_path)?;

    let mut outcomes = Vec::new();
    for mode_artifacts in &stored.modes {
        let outcome = run_validation(
            &mode_artifacts.models,
            &series,
            mode_artifacts.mode,
            &stored.manifest.indicator,
            mode_artifacts.normalizer.as_ref(),
        )
        .map_err(CliError::from_experiment)?;
        outcomes.push(outcome);
    }
    let (rendered, json_path) = write_validation_outputs(&cfg.out, &outcomes)?;
    print!("{rendered}");
    println!("wrote {}", json_path.display());
    Ok(())
}

fn cmd_report(args: CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&args)?;
    let json_path = cfg.out.join("report.json");
    let text = fs::read_to_string(&json_path)
        .map_err(|e| CliError::usage(format!("cannot open '{}': {e}", json_path.display())))?;
    let report = Report::from_json(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", json_path.display())))?;
    let rendered = render_markdown(&report);
    fs::write(cfg.out.join("report.md"), &rendered)?;
    print!("{rendered}");
    Ok(())
}

impl RunMode {
    fn includes_discrete(self) -> bool {
        matches!(self, RunMode::Discrete | RunMode::Both)
    }

    fn modes(self) -> Vec<Mode> {
        match self {
            RunMode::Continuous => vec![Mode::Continuous],
            RunMode::Discrete => vec![Mode::Discrete],
            RunMode::Both => vec![Mode::Continuous, Mode::Discrete],
        }
    }
}
