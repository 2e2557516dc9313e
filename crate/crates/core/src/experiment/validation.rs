//! Hold-out validation: 100 labeled rows split chronologically into ten
//! folds of ten, per-fold accuracies per model, and paired t-tests of
//! every family against the logistic-regression benchmark.

use serde::{Deserialize, Serialize};

use super::pipeline::Mode;
use super::ExperimentError;
use crate::classifiers::{ModelFamily, TrainedModel};
use crate::discretize::discretize;
use crate::indicators::{compute_features, IndicatorConfig};
use crate::market_data::{apply_normalizer, label_dates, NormalizationParams, PriceSeries};
use crate::metrics::{paired_t_test, TTestResult};

pub const FOLD_COUNT: usize = 10;
pub const FOLD_SIZE: usize = 10;
const ROWS_REQUIRED: usize = FOLD_COUNT * FOLD_SIZE;

/// One family's validation record (the t-test compares it against LR).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationEntry {
    pub family: ModelFamily,
    pub is_benchmark: bool,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub t_vs_benchmark: Option<TTestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationOutcome {
    pub mode: Mode,
    /// Labeled rows the series yielded; the first 100 are used.
    pub rows_available: usize,
    pub rows_used: usize,
    pub fold_count: usize,
    pub fold_size: usize,
    pub entries: Vec<ValidationEntry>,
}

/// Runs the validation protocol for one mode. Indicator warmup consumes
/// the leading validation bars; continuous features are normalized with
/// the training normalizer passed in (never refitted here).
pub fn run_validation(
    models: &[(ModelFamily, TrainedModel)],
    validation_series: &PriceSeries,
    mode: Mode,
    indicator: &IndicatorConfig,
    normalizer: Option<&NormalizationParams>,
) -> Result<ValidationOutcome, ExperimentError> {
    if !models
        .iter()
        .any(|(family, _)| family.is_benchmark())
    {
        return Err(ExperimentError::MissingBenchmark);
    }

    let features = compute_features(validation_series, indicator)?;
    let (rows, labels) = match mode {
        Mode::Continuous => {
            let (_, labels) = label_dates(validation_series, &features.dates)?;
            let rows: Vec<Vec<f64>> = features
                .rows
                .iter()
                .take(labels.len())
                .map(|r| r.to_vec())
                .collect();
            let normalizer = normalizer.ok_or_else(|| {
                ExperimentError::Model(crate::classifiers::ModelError::BadParams(
                    "continuous validation requires the training normalizer".into(),
                ))
            })?;
            (apply_normalizer(normalizer, &rows)?, labels)
        }
        Mode::Discrete => {
            let closes: Vec<f64> = features
                .dates
                .iter()
                .map(|d| {
                    let idx = validation_series.position(*d).expect("feature dates come from the series");
                    validation_series.bars()[idx].close
                })
                .collect();
            let signs = discretize(&features, &closes)?;
            let (_, labels) = label_dates(validation_series, &signs.dates)?;
            let rows: Vec<Vec<f64>> = signs
                .to_feature_rows()
                .into_iter()
                .take(labels.len())
                .collect();
            (rows, labels)
        }
    };

    let rows_available = labels.len();
    if rows_available < ROWS_REQUIRED {
        return Err(ExperimentError::ShortValidation {
            needed: ROWS_REQUIRED,
            got: rows_available,
        });
    }
    let rows = &rows[..ROWS_REQUIRED];
    let labels = &labels[..ROWS_REQUIRED];

    // Per-model, per-fold accuracy over consecutive chronological folds.
    let mut fold_table: Vec<(ModelFamily, Vec<f64>)> = Vec::with_capacity(models.len());
    for (family, model) in models {
        let predictions = model.predict_batch(rows)?;
        let folds: Vec<f64> = (0..FOLD_COUNT)
            .map(|f| {
                let range = f * FOLD_SIZE..(f + 1) * FOLD_SIZE;
                let correct = range
                    .clone()
                    .filter(|&i| predictions[i] == labels[i])
                    .count();
                correct as f64 / FOLD_SIZE as f64
            })
            .collect();
        fold_table.push((*family, folds));
    }

    let benchmark_folds = fold_table
        .iter()
        .find(|(family, _)| family.is_benchmark())
        .map(|(_, folds)| folds.clone())
        .expect("benchmark presence checked above");

    let entries = fold_table
        .into_iter()
        .map(|(family, folds)| {
            let t_vs_benchmark = if family.is_benchmark() {
                None
            } else {
                Some(paired_t_test(&folds, &benchmark_folds)?)
            };
            let mean = folds.iter().sum::<f64>() / folds.len() as f64;
            let var = folds.iter().map(|a| (a - mean).powi(2)).sum::<f64>()
                / (folds.len() - 1) as f64;
            Ok(ValidationEntry {
                family,
                is_benchmark: family.is_benchmark(),
                mean_accuracy: mean,
                std_accuracy: var.sqrt(),
                fold_accuracies: folds,
                t_vs_benchmark,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    Ok(ValidationOutcome {
        mode,
        rows_available,
        rows_used: ROWS_REQUIRED,
        fold_count: FOLD_COUNT,
        fold_size: FOLD_SIZE,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{train_lr, train_nb, LrParams, NbParams};
    use crate::synthetic::{generate, SyntheticConfig};

    fn validation_series(bars: usize) -> PriceSeries {
        generate(&SyntheticConfig {
            bars,
            seed: 404,
            ..Default::default()
        })
    }

    fn trained_pair(series: &PriceSeries) -> Vec<(ModelFamily, TrainedModel)> {
        let cfg = IndicatorConfig::default();
        let features = compute_features(series, &cfg).unwrap();
        let data = crate::market_data::make_labels(series, &features).unwrap();
        let lr = train_lr(&data.features, &data.labels, &LrParams::default()).unwrap();
        let nb = train_nb(&data.features, &data.labels, &NbParams::gaussian()).unwrap();
        vec![
            (ModelFamily::Logistic, TrainedModel::Logistic(lr)),
            (ModelFamily::NaiveBayes, TrainedModel::NaiveBayes(nb)),
        ]
    }

    #[test]
    fn exactly_ten_folds_of_ten() {
        let series = validation_series(140);
        let models = trained_pair(&series);
        let normalizer = {
            let cfg = IndicatorConfig::default();
            let features = compute_features(&series, &cfg).unwrap();
            let rows: Vec<Vec<f64>> = features.rows.iter().map(|r| r.to_vec()).collect();
            crate::market_data::fit_normalizer(&rows).unwrap()
        };
        let outcome = run_validation(
            &models,
            &series,
            Mode::Continuous,
            &IndicatorConfig::default(),
            Some(&normalizer),
        )
        .unwrap();
        assert_eq!(outcome.fold_count, 10);
        assert_eq!(outcome.fold_size, 10);
        assert_eq!(outcome.rows_used, 100);
        assert!(outcome.rows_available >= 100);
        for entry in &outcome.entries {
            assert_eq!(entry.fold_accuracies.len(), 10);
        }
        let benchmark = outcome.entries.iter().find(|e| e.is_benchmark).unwrap();
        assert!(benchmark.t_vs_benchmark.is_none());
        let other = outcome.entries.iter().find(|e| !e.is_benchmark).unwrap();
        assert!(other.t_vs_benchmark.is_some());
    }

    #[test]
    fn short_series_reports_achieved_count() {
        let series = validation_series(60);
        let models = trained_pair(&series);
        let err = run_validation(
            &models,
            &series,
            Mode::Discrete,
            &IndicatorConfig::default(),
            None,
        )
        .unwrap_err();
        match err {
            ExperimentError::ShortValidation { needed, got } => {
                assert_eq!(needed, 100);
                // 60 bars - 18 warmup - 1 sign row - 1 label row).
                assert_eq!(got, 40);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn missing_benchmark_is_an_error() {
        let series = validation_series(140);
        let models: Vec<_> = trained_pair(&series)
            .into_iter()
            .filter(|(f, _)| !f.is_benchmark())
            .collect();
        assert!(matches!(
            run_validation(
                &models,
                &series,
                Mode::Discrete,
                &IndicatorConfig::default(),
                None,
            )
            .unwrap_err(),
            ExperimentError::MissingBenchmark
        ));
    }

    #[test]
    fn model_identical_to_benchmark_is_degenerate() {
        let series = validation_series(140);
        let cfg = IndicatorConfig::default();
        let features = compute_features(&series, &cfg).unwrap();
        let closes: Vec<f64> = features
            .dates
            .iter()
            .map(|d| series.bars()[series.position(*d).unwrap()].close)
            .collect();
        let signs = discretize(&features, &closes).unwrap();
        let rows = signs.to_feature_rows();
        let labels: Vec<i8> = (0..rows.len())
            .map(|i| if i % 2 == 0 { 1 } else { -1 })
            .collect();
        let lr = train_lr(&rows, &labels, &LrParams::default()).unwrap();

        // The same fitted predictor registered under two family tags
        // yields identical folds, so the paired test must degenerate.
        let models = vec![
            (ModelFamily::Logistic, TrainedModel::Logistic(lr.clone())),
            (ModelFamily::Mlp, TrainedModel::Logistic(lr)),
        ];
        let outcome = run_validation(
            &models,
            &series,
            Mode::Discrete,
            &IndicatorConfig::default(),
            None,
        )
        .unwrap();
        let cloned = outcome
            .entries
            .iter()
            .find(|e| e.family == ModelFamily::Mlp)
            .unwrap();
        let t = cloned.t_vs_benchmark.unwrap();
        assert!(t.degenerate);
        assert_eq!(t.t, None);
    }
}
