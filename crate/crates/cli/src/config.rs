//! Resolved run configuration: command-line flags override config-file
//! values, which override defaults.

use std::fmt;
use std::fs;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use trendcast::classifiers::{LrParams, ModelFamily};
use trendcast::experiment::{preset_grids, GridPreset, GridSpec, ParamCombo};
use trendcast::indicators::IndicatorConfig;

use crate::CommonArgs;

/// Errors split by exit code: usage/input problems exit 2, experiment
/// failures exit 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn run(msg: impl Into<String>) -> Self {
        CliError::Run(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(_) => 1,
        }
    }

    pub fn from_experiment(err: trendcast::experiment::ExperimentError) -> Self {
        use trendcast::experiment::ExperimentError as E;
        match err {
            E::Data(_)
            | E::Indicator(_)
            | E::Discretize(_)
            | E::ShortValidation { .. }
            | E::MissingBenchmark
            | E::EmptyGrid { .. } => CliError::Usage(err.to_string()),
            _ => CliError::Run(err.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Run(msg) => f.write_str(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Run(err.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Continuous,
    Discrete,
    Both,
}

/// Config-file schema; every field optional so files can stay partial.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    input: Option<PathBuf>,
    validation: Option<PathBuf>,
    mode: Option<RunMode>,
    grid: Option<String>,
    train_frac: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    full: Option<bool>,
    indicator: Option<PartialIndicator>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialIndicator {
    ma_window: Option<usize>,
    wma_window: Option<usize>,
    n: Option<usize>,
    ema_short: Option<usize>,
    ema_long: Option<usize>,
    macd_signal_n: Option<usize>,
}

/// Custom grid file: one combination list per family. The benchmark entry
/// may be omitted (it defaults to plain logistic regression).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    mlp: Vec<trendcast::classifiers::MlpParams>,
    svm: Vec<trendcast::svm::SvmParams>,
    nb: Vec<trendcast::classifiers::NbParams>,
    rf: Vec<trendcast::classifiers::RfParams>,
    #[serde(default)]
    lr: Vec<LrParams>,
}

/// Fully resolved configuration for one command invocation.
#[derive(Debug)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub validation: Option<PathBuf>,
    pub mode: RunMode,
    pub grid: String,
    pub train_frac: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub jobs: usize,
    pub full: bool,
    pub indicator: IndicatorConfig,
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<RunConfig, CliError> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::usage(format!("cannot open config '{}': {e}", path.display()))
                })?;
                serde_json::from_str::<FileConfig>(&text).map_err(|e| {
                    CliError::usage(format!("config '{}': {e}", path.display()))
                })?
            }
            None => FileConfig::default(),
        };

        let defaults = IndicatorConfig::default();
        let file_ind = file.indicator.unwrap_or_default();
        let indicator = IndicatorConfig {
            ma_window: args
                .ma_window
                .or(file_ind.ma_window)
                .unwrap_or(defaults.ma_window),
            wma_window: args
                .wma_window
                .or(file_ind.wma_window)
                .unwrap_or(defaults.wma_window),
            n: args.n_window.or(file_ind.n).unwrap_or(defaults.n),
            ema_short: args
                .ema_short
                .or(file_ind.ema_short)
                .unwrap_or(defaults.ema_short),
            ema_long: args
                .ema_long
                .or(file_ind.ema_long)
                .unwrap_or(defaults.ema_long),
            macd_signal_n: args
                .macd_signal
                .or(file_ind.macd_signal_n)
                .unwrap_or(defaults.macd_signal_n),
        };
        indicator
            .validate()
            .map_err(|e| CliError::usage(e.to_string()))?;

        let train_frac = args.train_frac.or(file.train_frac).unwrap_or(0.75);
        if !(train_frac > 0.0 && train_frac < 1.0) {
            return Err(CliError::usage(format!(
                "--train-frac must be in (0, 1), got {train_frac}"
            )));
        }

        Ok(RunConfig {
            input: args.input.clone().or(file.input),
            validation: args.validation.clone().or(file.validation),
            mode: args.mode.or(file.mode).unwrap_or(RunMode::Both),
            grid: args
                .grid
                .clone()
                .or(file.grid)
                .unwrap_or_else(|| "smoke".to_string()),
            train_frac,
            seed: args.seed.or(file.seed).unwrap_or(2020),
            out: args
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from("out")),
            jobs: args.jobs.or(file.jobs).unwrap_or(0),
            full: args.full || file.full.unwrap_or(false),
            indicator,
        })
    }

    pub fn require_input(&self) -> Result<PathBuf, CliError> {
        self.input
            .clone()
            .ok_or_else(|| CliError::usage("--input <csv> is required (or a config file entry)"))
    }

    /// Grid specs from the preset name or from a grid JSON file.
    pub fn grids(&self) -> Result<Vec<GridSpec>, CliError> {
        if let Some(preset) = GridPreset::parse(&self.grid) {
            return Ok(preset_grids(preset, self.full));
        }
        let path = PathBuf::from(&self.grid);
        let text = fs::read_to_string(&path).map_err(|e| {
            CliError::usage(format!(
                "--grid '{}' is neither a preset (smoke, paper-full) nor a readable file: {e}",
                self.grid
            ))
        })?;
        let file: GridFile = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("grid file '{}': {e}", path.display())))?;

        let spec = |family: ModelFamily, combos: Vec<ParamCombo>| -> Result<GridSpec, CliError> {
            if combos.is_empty() {
                return Err(CliError::usage(format!(
                    "grid file '{}' has no combinations for {family}",
                    path.display()
                )));
            }
            Ok(GridSpec {
                family,
                combos,
                truncated: false,
            })
        };
        let lr: Vec<ParamCombo> = if file.lr.is_empty() {
            vec![ParamCombo::Logistic(LrParams::default())]
        } else {
            file.lr.into_iter().map(ParamCombo::Logistic).collect()
        };
        Ok(vec![
            spec(
                ModelFamily::Mlp,
                file.mlp.into_iter().map(ParamCombo::Mlp).collect(),
            )?,
            spec(
                ModelFamily::Svm,
                file.svm.into_iter().map(ParamCombo::Svm).collect(),
            )?,
            spec(
                ModelFamily::NaiveBayes,
                file.nb.into_iter().map(ParamCombo::NaiveBayes).collect(),
            )?,
            spec(
                ModelFamily::RandomForest,
                file.rf.into_iter().map(ParamCombo::RandomForest).collect(),
            )?,
            spec(ModelFamily::Logistic, lr)?,
        ])
    }
}
