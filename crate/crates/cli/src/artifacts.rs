//! Model artifact layout under the output directory:
//!
//! ```text
//! <out>/models/manifest.json
//! <out>/models/<mode>/<family>.json      (versioned model documents)
//! <out>/models/<mode>/normalizer.json    (continuous mode only)
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use trendcast::classifiers::{ModelFamily, TrainedModel};
use trendcast::experiment::{
    render_validation_markdown, ExperimentOutput, Mode, ValidationOutcome,
};
use trendcast::indicators::IndicatorConfig;
use trendcast::market_data::NormalizationParams;

use crate::config::{CliError, RunConfig};

const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub grid: String,
    pub master_seed: u64,
    pub train_fraction: f64,
    pub indicator: IndicatorConfig,
    pub modes: Vec<Mode>,
    pub families: Vec<ModelFamily>,
}

/// Reloaded per-mode artifacts.
pub struct StoredMode {
    pub mode: Mode,
    pub normalizer: Option<NormalizationParams>,
    pub models: Vec<(ModelFamily, TrainedModel)>,
}

pub struct StoredArtifacts {
    pub manifest: Manifest,
    pub modes: Vec<StoredMode>,
}

fn family_file(family: ModelFamily) -> String {
    format!("{}.json", family.short_name().to_lowercase())
}

pub fn write_artifacts(cfg: &RunConfig, output: &ExperimentOutput) -> Result<(), CliError> {
    let root = cfg.out.join("models");
    fs::create_dir_all(&root)?;

    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        grid: cfg.grid.clone(),
        master_seed: cfg.seed,
        train_fraction: cfg.train_frac,
        indicator: cfg.indicator.clone(),
        modes: output.artifacts.iter().map(|m| m.mode).collect(),
        families: output
            .artifacts
            .first()
            .map(|m| m.models.iter().map(|(f, _)| *f).collect())
            .unwrap_or_default(),
    };
    let mut manifest_json =
        serde_json::to_string_pretty(&manifest).map_err(|e| CliError::run(e.to_string()))?;
    manifest_json.push('\n');
    fs::write(root.join("manifest.json"), manifest_json)?;

    for mode_artifacts in &output.artifacts {
        let dir = root.join(mode_artifacts.mode.name());
        fs::create_dir_all(&dir)?;
        for (family, model) in &mode_artifacts.models {
            fs::write(dir.join(family_file(*family)), model.to_json())?;
        }
        if let Some(normalizer) = &mode_artifacts.normalizer {
            let mut json = serde_json::to_string_pretty(normalizer)
                .map_err(|e| CliError::run(e.to_string()))?;
            json.push('\n');
            fs::write(dir.join("normalizer.json"), json)?;
        }
    }
    Ok(())
}

pub fn load_artifacts(out_dir: &Path) -> Result<StoredArtifacts, CliError> {
    let root = out_dir.join("models");
    let manifest_path = root.join("manifest.json");
    let text = fs::read_to_string(&manifest_path).map_err(|_| {
        CliError::usage(format!(
            "no model artifacts at '{}'; run `trendcast run` first",
            manifest_path.display()
        ))
    })?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", manifest_path.display())))?;
    if manifest.format_version != MANIFEST_VERSION {
        return Err(CliError::usage(format!(
            "unsupported manifest version {} (expected {MANIFEST_VERSION})",
            manifest.format_version
        )));
    }
    if !manifest.families.iter().any(|f| f.is_benchmark()) {
        return Err(CliError::usage(
            "artifacts are missing the LR benchmark model, which validation requires",
        ));
    }

    let mut modes = Vec::new();
    for mode in &manifest.modes {
        let dir = root.join(mode.name());
        let mut models = Vec::new();
        for family in &manifest.families {
            let path = dir.join(family_file(*family));
            let text = fs::read_to_string(&path).map_err(|e| {
                CliError::usage(format!("missing model artifact '{}': {e}", path.display()))
            })?;
            let model = TrainedModel::from_json(&text)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            models.push((*family, model));
        }
        let normalizer_path = dir.join("normalizer.json");
        let normalizer = if normalizer_path.exists() {
            let text = fs::read_to_string(&normalizer_path)?;
            Some(serde_json::from_str(&text).map_err(|e| {
                CliError::usage(format!("{}: {e}", normalizer_path.display()))
            })?)
        } else {
            None
        };
        modes.push(StoredMode {
            mode: *mode,
            normalizer,
            models,
        });
    }
    Ok(StoredArtifacts { manifest, modes })
}

/// Writes validation.json and validation.md; returns the rendered table.
pub fn write_validation_outputs(
    out_dir: &Path,
    outcomes: &[ValidationOutcome],
) -> Result<(String, PathBuf), CliError> {
    fs::create_dir_all(out_dir)?;
    let mut json =
        serde_json::to_string_pretty(outcomes).map_err(|e| CliError::run(e.to_string()))?;
    json.push('\n');
    let json_path = out_dir.join("validation.json");
    fs::write(&json_path, json)?;
    let rendered = render_validation_markdown(outcomes);
    fs::write(out_dir.join("validation.md"), &rendered)?;
    Ok((rendered, json_path))
}
