//! From-scratch classifier families behind one prediction contract.
//!
//! Every trainer returns a [`TrainedModel`]: an immutable, serializable
//! value whose `predict_proba` yields the up-move probability and whose
//! `predict` thresholds it at 0.5 (probability exactly 0.5 counts as up).
//! Training is deterministic: the same data and seed reproduce the model
//! bit for bit.

mod logistic;
mod mlp;
mod naive_bayes;
mod random_forest;

pub use logistic::{train_lr, LrModel, LrParams};
pub use mlp::{train_mlp, MlpModel, MlpParams};
pub use naive_bayes::{train_nb, NbModel, NbParams, NbVariant};
pub use random_forest::{train_rf, RfModel, RfParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::svm::SvmModel;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("feature vector has {got} entries, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("row {row} has {got} features, expected {expected}")]
    RaggedMatrix {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in the input")]
    NonFinite,
    #[error("labels must be +1 or -1, found {0}")]
    BadLabel(i8),
    #[error("class {0} is absent from the training data")]
    MissingClass(i8),
    #[error("Bernoulli naive Bayes requires ±1-valued features, found {0}")]
    NonSignFeature(f64),
    #[error("invalid parameters: {0}")]
    BadParams(String),
}

/// Serialization format version for model documents.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Classifier family tags, named as the reports print them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelFamily {
    Mlp,
    Svm,
    NaiveBayes,
    RandomForest,
    Logistic,
}

impl ModelFamily {
    /// The five families, in report order.
    pub const ALL: [ModelFamily; 5] = [
        ModelFamily::Mlp,
        ModelFamily::Svm,
        ModelFamily::NaiveBayes,
        ModelFamily::RandomForest,
        ModelFamily::Logistic,
    ];

    pub fn short_name(&self) -> &'static str {
        match self {
            ModelFamily::Mlp => "ANN",
            ModelFamily::Svm => "SVM",
            ModelFamily::NaiveBayes => "NB",
            ModelFamily::RandomForest => "RF",
            ModelFamily::Logistic => "LR",
        }
    }

    pub fn is_benchmark(&self) -> bool {
        matches!(self, ModelFamily::Logistic)
    }
}

impl std::fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.short_name())
    }
}

/// A fitted classifier of any family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum TrainedModel {
    Mlp(MlpModel),
    Svm(SvmModel),
    NaiveBayes(NbModel),
    RandomForest(RfModel),
    Logistic(LrModel),
}

impl TrainedModel {
    pub fn family(&self) -> ModelFamily {
        match self {
            TrainedModel::Mlp(_) => ModelFamily::Mlp,
            TrainedModel::Svm(_) => ModelFamily::Svm,
            TrainedModel::NaiveBayes(_) => ModelFamily::NaiveBayes,
            TrainedModel::RandomForest(_) => ModelFamily::RandomForest,
            TrainedModel::Logistic(_) => ModelFamily::Logistic,
        }
    }

    pub fn feature_count(&self) -> usize {
        match self {
            TrainedModel::Mlp(m) => m.feature_count(),
            TrainedModel::Svm(m) => m.feature_count(),
            TrainedModel::NaiveBayes(m) => m.feature_count(),
            TrainedModel::RandomForest(m) => m.feature_count,
            TrainedModel::Logistic(m) => m.feature_count(),
        }
    }

    /// Probability of the +1 class.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, ModelError> {
        check_vector(x, self.feature_count())?;
        match self {
            TrainedModel::Mlp(m) => Ok(m.forward(x)),
            TrainedModel::Svm(m) => m.predict_proba(x),
            TrainedModel::NaiveBayes(m) => m.posterior_pos(x),
            TrainedModel::RandomForest(m) => Ok(m.vote_fraction(x)),
            TrainedModel::Logistic(m) => Ok(m.probability(x)),
        }
    }

    /// ±1 label: +1 iff the probability is at least 0.5.
    pub fn predict(&self, x: &[f64]) -> Result<i8, ModelError> {
        Ok(label_from_proba(self.predict_proba(x)?))
    }

    pub fn predict_proba_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        rows.iter().map(|r| self.predict_proba(r)).collect()
    }

    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<i8>, ModelError> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    /// Versioned JSON document; exact round-trip for all finite values.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            format_version: u32,
            model: &'a TrainedModel,
        }
        serde_json::to_string_pretty(&Doc {
            format_version: MODEL_FORMAT_VERSION,
            model: self,
        })
        .expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<TrainedModel, String> {
        #[derive(Deserialize)]
        struct Doc {
            format_version: u32,
            model: TrainedModel,
        }
        let doc: Doc = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(format!(
                "unsupported model format version {} (expected {})",
                doc.format_version, MODEL_FORMAT_VERSION
            ));
        }
        Ok(doc.model)
    }
}

pub(crate) fn label_from_proba(p: f64) -> i8 {
    if p >= 0.5 {
        1
    } else {
        -1
    }
}

pub(crate) fn check_vector(x: &[f64], expected: usize) -> Result<(), ModelError> {
    if x.len() != expected {
        return Err(ModelError::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite);
    }
    Ok(())
}

/// Shared training-input validation: rectangular finite matrix, matching
/// ±1 labels, at least one row.
pub(crate) fn check_training_set(x: &[Vec<f64>], y: &[i8]) -> Result<usize, ModelError> {
    if x.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if x.len() != y.len() {
        return Err(ModelError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let cols = x[0].len();
    if cols == 0 {
        return Err(ModelError::BadParams("feature matrix has no columns".into()));
    }
    for (row, r) in x.iter().enumerate() {
        if r.len() != cols {
            return Err(ModelError::RaggedMatrix {
                row,
                expected: cols,
                got: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite);
        }
    }
    for &label in y {
        if label != 1 && label != -1 {
            return Err(ModelError::BadLabel(label));
        }
    }
    Ok(cols)
}

/// 64-bit mix for deriving independent sub-seeds (splitmix64 finalizer).
pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_rule() {
        assert_eq!(label_from_proba(0.5), 1);
        assert_eq!(label_from_proba(0.2), -1);
        assert_eq!(label_from_proba(0.8), 1);
    }

    #[test]
    fn training_set_validation() {
        assert!(matches!(
            check_training_set(&[], &[]).unwrap_err(),
            ModelError::EmptyTrainingSet
        ));
        assert!(matches!(
            check_training_set(&[vec![1.0], vec![1.0, 2.0]], &[1, -1]).unwrap_err(),
            ModelError::RaggedMatrix { row: 1, .. }
        ));
        assert!(matches!(
            check_training_set(&[vec![f64::NAN]], &[1]).unwrap_err(),
            ModelError::NonFinite
        ));
        assert!(matches!(
            check_training_set(&[vec![1.0]], &[0]).unwrap_err(),
            ModelError::BadLabel(0)
        ));
        assert_eq!(check_training_set(&[vec![1.0, 2.0]], &[1]).unwrap(), 2);
    }

    #[test]
    fn model_json_roundtrip_is_exact() {
        let x = vec![
            vec![0.123456789012345, -3.0],
            vec![2.0, 0.1],
            vec![-1.5, 4.0],
            vec![0.7, -0.2],
        ];
        let y = vec![1, -1, 1, -1];
        let model = train_lr(
            &x,
            &y,
            &LrParams {
                max_iterations: 50,
                tolerance: 1e-10,
                l2: 0.1,
            },
        )
        .unwrap();
        let model = TrainedModel::Logistic(model);
        let json = model.to_json();
        let back = TrainedModel::from_json(&json).unwrap();
        assert_eq!(model, back);
        assert_eq!(json, back.to_json());
    }

    #[test]
    fn batch_predict_equals_elementwise() {
        let x = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 0.0]];
        let y = vec![1, 1, -1, -1];
        let model = TrainedModel::RandomForest(
            train_rf(
                &x,
                &y,
                &RfParams {
                    mtry: 2,
                    n_trees: 5,
                    seed: 3,
                },
            )
            .unwrap(),
        );
        let batch = model.predict_batch(&x).unwrap();
        for (row, expected) in x.iter().zip(&batch) {
            assert_eq!(model.predict(row).unwrap(), *expected);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let model = TrainedModel::Logistic(
            train_lr(
                &[vec![0.0], vec![1.0]],
                &[-1, 1],
                &LrParams::default(),
            )
            .unwrap(),
        );
        assert!(matches!(
            model.predict(&[1.0, 2.0]).unwrap_err(),
            ModelError::DimensionMismatch { .. }
        ));
        assert!(matches!(
            model.predict(&[f64::INFINITY]).unwrap_err(),
            ModelError::NonFinite
        ));
    }
}
