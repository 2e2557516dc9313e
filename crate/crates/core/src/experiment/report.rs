//! Report document: a machine-readable JSON schema plus a human-readable
//! markdown rendering with four-decimal tables.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::LeaderboardRow;
use super::pipeline::Mode;
use super::validation::ValidationOutcome;
use super::ExperimentError;
use crate::classifiers::ModelFamily;
use crate::indicators::IndicatorConfig;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub report_schema: u32,
    pub crate_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub family: ModelFamily,
    pub combinations: usize,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub grid: String,
    pub modes: Vec<Mode>,
    pub train_fraction: f64,
    pub master_seed: u64,
    pub indicator: IndicatorConfig,
    pub jobs: usize,
    pub grids: Vec<GridSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataFingerprint {
    pub input_sha256: String,
    pub validation_sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardSection {
    pub mode: Mode,
    pub family: ModelFamily,
    pub rows: Vec<LeaderboardRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub family: ModelFamily,
    pub label: String,
    pub is_benchmark: bool,
    pub params: String,
    pub accuracy: f64,
    pub tp_rate: f64,
    pub fp_rate: f64,
    pub auc: Option<f64>,
    pub f_weighted: f64,
    /// Rank among the non-benchmark families by weighted F; the
    /// benchmark row carries none.
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSection {
    pub mode: Mode,
    pub majority_baseline: f64,
    pub entries: Vec<ComparisonEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FStatRow {
    pub family: ModelFamily,
    pub f_continuous: f64,
    pub f_discrete: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FStatisticsSection {
    pub rows: Vec<FStatRow>,
    pub discrete_improves_all: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub mode: Mode,
    pub family: ModelFamily,
    pub sha256: String,
}

/// The full experiment report. Serialization is deterministic: identical
/// inputs produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ConfigEcho,
    pub data_fingerprint: DataFingerprint,
    pub leaderboards: Vec<LeaderboardSection>,
    pub comparison: Vec<ComparisonSection>,
    pub validation: Option<Vec<ValidationOutcome>>,
    pub validation_note: Option<String>,
    pub f_statistics: Option<FStatisticsSection>,
    pub model_artifacts: Vec<ModelArtifact>,
    pub versions: Versions,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Report, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Writes `report.json` and `report.md` into `dir`; returns their paths.
pub fn emit_report(report: &Report, dir: &Path) -> Result<(PathBuf, PathBuf), ExperimentError> {
    std::fs::create_dir_all(dir)?;
    let json_path = dir.join("report.json");
    let md_path = dir.join("report.md");
    std::fs::write(&json_path, report.to_json())?;
    std::fs::write(&md_path, render_markdown(report))?;
    Ok((json_path, md_path))
}

fn f4(v: f64) -> String {
    format!("{v:.4}")
}

/// The fold-accuracy/t-test tables on their own, reused by the report
/// renderer and by the standalone validate command.
pub fn render_validation_markdown(outcomes: &[ValidationOutcome]) -> String {
    let mut out = String::new();
    for outcome in outcomes {
        out.push('\n');
        out.push_str(&format!(
            "## Validation vs benchmark ({}, {} folds x {} samples)\n\n",
            outcome.mode.name(),
            outcome.fold_count,
            outcome.fold_size
        ));
        out.push_str("| Model | Mean (Accuracy) | N | Std. Dev. | t |\n");
        out.push_str("|---|---|---|---|---|\n");
        for entry in &outcome.entries {
            let t_cell = match &entry.t_vs_benchmark {
                None if entry.is_benchmark => String::new(),
                None => "-".to_string(),
                Some(r) => match r.t {
                    None => "degenerate (zero variance)".to_string(),
                    Some(t) => {
                        let stars = if r.significant_at_01 {
                            "*"
                        } else if r.significant_at_05 {
                            "**"
                        } else {
                            ""
                        };
                        format!("{}{}", f4(t), stars)
                    }
                },
            };
            let label = if entry.is_benchmark {
                format!("{} (Benchmark)", entry.family)
            } else {
                entry.family.to_string()
            };
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                label,
                f4(entry.mean_accuracy),
                entry.fold_accuracies.len(),
                f4(entry.std_accuracy),
                t_cell
            ));
        }
        out.push('\n');
        out.push_str("Note: * marks significance at the 0.01 level, ** at 0.05.\n");
    }
    out
}

fn opt4(v: Option<f64>) -> String {
    v.map(f4).unwrap_or_else(|| "-".to_string())
}

/// Human-readable rendering: top-3 leaderboards per family, the
/// best-model comparison, the validation t-table, and the
/// continuous-vs-discrete F comparison.
pub fn render_markdown(report: &Report) -> String {
    let mut out = String::new();
    let push_line = |out: &mut String, line: &str| {
        out.push_str(line);
        out.push('\n');
    };

    push_line(&mut out, "# Direction-forecasting experiment report");
    push_line(&mut out, "");
    push_line(&mut out, &format!("- grid: `{}`", report.config.grid));
    push_line(
        &mut out,
        &format!(
            "- modes: {}",
            report
                .config
                .modes
                .iter()
                .map(Mode::name)
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
    push_line(
        &mut out,
        &format!("- train fraction: {}", report.config.train_fraction),
    );
    push_line(
        &mut out,
        &format!("- master seed: {}", report.config.master_seed),
    );
    push_line(
        &mut out,
        &format!(
            "- input sha256: `{}`",
            report.data_fingerprint.input_sha256
        ),
    );
    if let Some(hash) = &report.data_fingerprint.validation_sha256 {
        push_line(&mut out, &format!("- validation sha256: `{hash}`"));
    }
    for grid in &report.config.grids {
        if grid.truncated {
            push_line(
                &mut out,
                &format!(
                    "- note: the {} grid was truncated relative to the published table ({} combinations); pass --full for the complete axis",
                    grid.family, grid.combinations
                ),
            );
        }
    }

    for section in &report.leaderboards {
        push_line(&mut out, "");
        push_line(
            &mut out,
            &format!(
                "## Top combinations - {} ({})",
                section.family,
                section.mode.name()
            ),
        );
        push_line(&mut out, "");
        push_line(&mut out, "| Rank | Parameters | Accuracy | MAE | RMSE | RAE |");
        push_line(&mut out, "|---|---|---|---|---|---|");
        for row in section.rows.iter().take(3) {
            if let Some(err) = &row.error {
                push_line(
                    &mut out,
                    &format!("| {} | {} | failed: {} | - | - | - |", row.rank, row.description, err),
                );
            } else {
                push_line(
                    &mut out,
                    &format!(
                        "| {} | {} | {} | {} | {} | {} |",
                        row.rank,
                        row.description,
                        opt4(row.accuracy),
                        opt4(row.mae),
                        opt4(row.rmse),
                        opt4(row.rae)
                    ),
                );
            }
        }
        let failures = section.rows.iter().filter(|r| r.error.is_some()).count();
        if failures > 0 {
            push_line(
                &mut out,
                &format!(
                    "| | ({failures} of {} combinations failed; see report.json) | | | | |",
                    section.rows.len()
                ),
            );
        }
    }

    for section in &report.comparison {
        push_line(&mut out, "");
        push_line(
            &mut out,
            &format!("## Best-model comparison ({})", section.mode.name()),
        );
        push_line(&mut out, "");
        push_line(
            &mut out,
            &format!(
                "Majority-class baseline accuracy: {}",
                f4(section.majority_baseline)
            ),
        );
        push_line(&mut out, "");
        push_line(&mut out, "| Model | TP rate | FP rate | ROC | F-Stat. | Rank |");
        push_line(&mut out, "|---|---|---|---|---|---|");
        for entry in &section.entries {
            let rank = match entry.rank {
                Some(r) => r.to_string(),
                None => "(Benchmark)".to_string(),
            };
            push_line(
                &mut out,
                &format!(
                    "| {} | {} | {} | {} | {} | {} |",
                    entry.label,
                    f4(entry.tp_rate),
                    f4(entry.fp_rate),
                    opt4(entry.auc),
                    f4(entry.f_weighted),
                    rank
                ),
            );
        }
    }

    match &report.validation {
        Some(outcomes) => {
            out.push_str(&render_validation_markdown(outcomes));
        }
        None => {
            push_line(&mut out, "");
            push_line(&mut out, "## Validation");
            push_line(&mut out, "");
            push_line(
                &mut out,
                &format!(
                    "Not run: {}.",
                    report
                        .validation_note
                        .as_deref()
                        .unwrap_or("no validation series provided")
                ),
            );
        }
    }

    if let Some(fstats) = &report.f_statistics {
        push_line(&mut out, "");
        push_line(&mut out, "## Weighted F: continuous vs discrete");
        push_line(&mut out, "");
        push_line(&mut out, "| Model | F (continuous) | F (discrete) | Delta |");
        push_line(&mut out, "|---|---|---|---|");
        for row in &fstats.rows {
            push_line(
                &mut out,
                &format!(
                    "| {} | {} | {} | {:+.4} |",
                    row.family,
                    f4(row.f_continuous),
                    f4(row.f_discrete),
                    row.delta
                ),
            );
        }
        push_line(&mut out, "");
        push_line(&mut out, &format!("Observation: {}.", fstats.note));
    }

    push_line(&mut out, "");
    push_line(&mut out, "## Model artifacts");
    push_line(&mut out, "");
    for artifact in &report.model_artifacts {
        push_line(
            &mut out,
            &format!(
                "- {}/{}: `{}`",
                artifact.mode.name(),
                artifact.family,
                artifact.sha256
            ),
        );
    }
    out
}
