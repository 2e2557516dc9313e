//! Grid search, best-model selection, the 10x10 validation protocol, and
//! report emission.

mod grid;
mod pipeline;
mod report;
mod validation;

pub use grid::{
    preset_grids, run_grid, select_best, train_combo, GridPreset, GridSpec, LeaderboardRow,
    ParamCombo,
};
pub use pipeline::{
    fingerprint_series, prepare_mode, run_experiment, ExperimentConfig, ExperimentOutput, Mode,
    ModeArtifacts, PreparedData,
};
pub use report::{
    emit_report, render_markdown, render_validation_markdown, ComparisonEntry,
    ComparisonSection, ConfigEcho, DataFingerprint, FStatRow, FStatisticsSection, GridSummary,
    LeaderboardSection, ModelArtifact, Report, Versions, REPORT_SCHEMA_VERSION,
};
pub use validation::{run_validation, ValidationEntry, ValidationOutcome, FOLD_COUNT, FOLD_SIZE};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Data(#[from] crate::market_data::DataError),
    #[error(transparent)]
    Indicator(#[from] crate::indicators::IndicatorError),
    #[error(transparent)]
    Discretize(#[from] crate::discretize::DiscretizeError),
    #[error(transparent)]
    Model(#[from] crate::classifiers::ModelError),
    #[error(transparent)]
    Eval(#[from] crate::metrics::EvalError),
    #[error("grid for {family} is empty")]
    EmptyGrid { family: String },
    #[error("leaderboard has no successful combination")]
    EmptyLeaderboard,
    #[error("validation series yields {got} usable rows, need at least {needed}")]
    ShortValidation { needed: usize, got: usize },
    #[error("benchmark model (LR) is required but missing")]
    MissingBenchmark,
    #[error("failed to build worker pool: {0}")]
    Thread(String),
    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),
}
