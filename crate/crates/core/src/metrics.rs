//! Evaluation statistics: confusion-matrix metrics, probability errors
//! (MAE / RMSE / RAE), ROC AUC, and the paired t-test used for the
//! model-versus-benchmark comparison.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction and label sequences differ in length ({predictions} vs {labels})")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("cannot evaluate an empty sequence")]
    Empty,
    #[error("metric needs both classes present in the labels")]
    SingleClass,
    #[error("RAE denominator is zero (degenerate prior {0})")]
    DegeneratePrior(f64),
    #[error("t-test needs at least 2 folds, got {0}")]
    TooFewFolds(usize),
}

/// Counts of prediction/label agreement, +1 taken as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Per-class precision/recall/F, accuracy, and the support-weighted F.
/// Ratios with a zero denominator are reported as 0 and flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreMetrics {
    pub precision_pos: f64,
    pub precision_neg: f64,
    pub recall_pos: f64,
    pub recall_neg: f64,
    pub accuracy: f64,
    pub f_pos: f64,
    pub f_neg: f64,
    pub f_weighted: f64,
    /// True when any ratio above had a zero denominator.
    pub has_undefined_ratios: bool,
}

/// Probability-error metrics against {0, 1} targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityErrors {
    pub mae: f64,
    pub rmse: f64,
    pub rae: f64,
}

/// Paired t-test summary. `t` is absent when the fold differences have
/// zero variance (degenerate case).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub mean_a: f64,
    pub mean_b: f64,
    pub std_a: f64,
    pub std_b: f64,
    pub t: Option<f64>,
    pub degrees_of_freedom: usize,
    pub significant_at_05: bool,
    pub significant_at_01: bool,
    pub degenerate: bool,
}

/// Tallies the confusion matrix from ±1 predictions and labels.
pub fn confusion(predictions: &[i8], labels: &[i8]) -> Result<ConfusionMatrix, EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
    };
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p > 0, l > 0) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

fn ratio(num: usize, den: usize, undefined: &mut bool) -> f64 {
    if den == 0 {
        *undefined = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f_score(precision: f64, recall: f64, undefined: &mut bool) -> f64 {
    if precision + recall == 0.0 {
        *undefined = true;
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Precision and recall per class, accuracy, per-class F, and the
/// support-weighted F average.
pub fn core_metrics(cm: &ConfusionMatrix) -> Result<CoreMetrics, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let mut undefined = false;
    let precision_pos = ratio(cm.tp, cm.tp + cm.fp, &mut undefined);
    let precision_neg = ratio(cm.tn, cm.tn + cm.fn_, &mut undefined);
    let recall_pos = ratio(cm.tp, cm.tp + cm.fn_, &mut undefined);
    let recall_neg = ratio(cm.tn, cm.tn + cm.fp, &mut undefined);
    let accuracy = (cm.tp + cm.tn) as f64 / total as f64;
    let f_pos = f_score(precision_pos, recall_pos, &mut undefined);
    let f_neg = f_score(precision_neg, recall_neg, &mut undefined);
    let support_pos = (cm.tp + cm.fn_) as f64;
    let support_neg = (cm.tn + cm.fp) as f64;
    let f_weighted = (support_pos * f_pos + support_neg * f_neg) / total as f64;
    Ok(CoreMetrics {
        precision_pos,
        precision_neg,
        recall_pos,
        recall_neg,
        accuracy,
        f_pos,
        f_neg,
        f_weighted,
        has_undefined_ratios: undefined,
    })
}

/// MAE, RMSE and RAE of predicted probabilities against {0, 1} targets.
/// RAE normalizes by the error of the constant prior predictor, so the
/// prior itself scores exactly 1.
pub fn probability_errors(
    probs: &[f64],
    labels: &[i8],
    train_prior_pos: f64,
) -> Result<ProbabilityErrors, EvalError> {
    if probs.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            predictions: probs.len(),
            labels: labels.len(),
        });
    }
    if probs.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut prior_abs_sum = 0.0;
    for (&p, &l) in probs.iter().zip(labels) {
        let target = if l > 0 { 1.0 } else { 0.0 };
        abs_sum += (p - target).abs();
        sq_sum += (p - target).powi(2);
        prior_abs_sum += (train_prior_pos - target).abs();
    }
    if prior_abs_sum == 0.0 {
        return Err(EvalError::DegeneratePrior(train_prior_pos));
    }
    let n = probs.len() as f64;
    Ok(ProbabilityErrors {
        mae: abs_sum / n,
        rmse: (sq_sum / n).sqrt(),
        rae: abs_sum / prior_abs_sum,
    })
}

/// Mann-Whitney AUC: the probability that a random positive outranks a
/// random negative, ties counted one half. Rank averaging makes the
/// result invariant under strictly monotone score transforms.
pub fn roc_auc(probs: &[f64], labels: &[i8]) -> Result<f64, EvalError> {
    if probs.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            predictions: probs.len(),
            labels: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l > 0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));

    // Average ranks within tied score groups.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && probs[order[j]] == probs[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1..=j
        for &idx in &order[i..j] {
            if labels[idx] > 0 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let auc = (rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0) / (n_pos * n_neg) as f64;
    Ok(auc)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

// Two-sided critical values of Student's t for df 1..=30 (index df-1).
const T_CRIT_05: [f64; 30] = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160,
    2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056,
    2.052, 2.048, 2.045, 2.042,
];
const T_CRIT_01: [f64; 30] = [
    63.657, 9.925, 5.841, 4.604, 4.032, 3.707, 3.499, 3.355, 3.250, 3.169, 3.106, 3.055, 3.012,
    2.977, 2.947, 2.921, 2.898, 2.878, 2.861, 2.845, 2.831, 2.819, 2.807, 2.797, 2.787, 2.779,
    2.771, 2.763, 2.756, 2.750,
];

fn critical_values(df: usize) -> (f64, f64) {
    if df == 0 {
        (f64::INFINITY, f64::INFINITY)
    } else if df <= 30 {
        (T_CRIT_05[df - 1], T_CRIT_01[df - 1])
    } else {
        // Normal approximation beyond the tabulated range.
        (1.960, 2.576)
    }
}

/// Paired two-sided t-test on per-fold accuracies: differences
/// `a_i - b_i`, df = folds - 1, significance against tabulated critical
/// values. Zero-variance differences are reported as degenerate.
pub fn paired_t_test(acc_a: &[f64], acc_b: &[f64]) -> Result<TTestResult, EvalError> {
    if acc_a.len() != acc_b.len() {
        return Err(EvalError::LengthMismatch {
            predictions: acc_a.len(),
            labels: acc_b.len(),
        });
    }
    if acc_a.len() < 2 {
        return Err(EvalError::TooFewFolds(acc_a.len()));
    }
    let n = acc_a.len();
    let diffs: Vec<f64> = acc_a.iter().zip(acc_b).map(|(a, b)| a - b).collect();
    let sd = sample_std(&diffs);
    let df = n - 1;
    let base = TTestResult {
        mean_a: mean(acc_a),
        mean_b: mean(acc_b),
        std_a: sample_std(acc_a),
        std_b: sample_std(acc_b),
        t: None,
        degrees_of_freedom: df,
        significant_at_05: false,
        significant_at_01: false,
        degenerate: true,
    };
    if sd == 0.0 {
        return Ok(base);
    }
    let t = mean(&diffs) / (sd / (n as f64).sqrt());
    let (crit05, crit01) = critical_values(df);
    Ok(TTestResult {
        t: Some(t),
        significant_at_05: t.abs() > crit05,
        significant_at_01: t.abs() > crit01,
        degenerate: false,
        ..base
    })
}

/// Independent two-sample t-test with pooled variance (df = 2n - 2).
/// Offered alongside the paired form for comparisons whose folds are not
/// shared.
pub fn independent_t_test(acc_a: &[f64], acc_b: &[f64]) -> Result<TTestResult, EvalError> {
    if acc_a.len() != acc_b.len() {
        return Err(EvalError::LengthMismatch {
            predictions: acc_a.len(),
            labels: acc_b.len(),
        });
    }
    if acc_a.len() < 2 {
        return Err(EvalError::TooFewFolds(acc_a.len()));
    }
    let n = acc_a.len() as f64;
    let (std_a, std_b) = (sample_std(acc_a), sample_std(acc_b));
    let df = acc_a.len() * 2 - 2;
    let pooled = ((std_a.powi(2) + std_b.powi(2)) / 2.0).sqrt();
    let base = TTestResult {
        mean_a: mean(acc_a),
        mean_b: mean(acc_b),
        std_a,
        std_b,
        t: None,
        degrees_of_freedom: df,
        significant_at_05: false,
        significant_at_01: false,
        degenerate: true,
    };
    if pooled == 0.0 {
        return Ok(base);
    }
    let t = (mean(acc_a) - mean(acc_b)) / (pooled * (2.0 / n).sqrt());
    let (crit05, crit01) = critical_values(df);
    Ok(TTestResult {
        t: Some(t),
        significant_at_05: t.abs() > crit05,
        significant_at_01: t.abs() > crit01,
        degenerate: false,
        ..base
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_counts() {
        let labels = vec![1, 1, 1, 1, 1, 1, -1, -1, -1, -1];
        let cm = confusion(&labels, &labels).unwrap();
        assert_eq!((cm.tp, cm.tn, cm.fp, cm.fn_), (6, 4, 0, 0));

        let all_pos = vec![1; 10];
        let half: Vec<i8> = (0..10).map(|i| if i < 5 { 1 } else { -1 }).collect();
        let cm = confusion(&all_pos, &half).unwrap();
        assert_eq!((cm.tp, cm.fp, cm.tn, cm.fn_), (5, 5, 0, 0));

        let inverted: Vec<i8> = half.iter().map(|l| -l).collect();
        let cm = confusion(&inverted, &half).unwrap();
        assert_eq!((cm.tp, cm.tn), (0, 0));
    }

    #[test]
    fn core_metrics_hand_fixture() {
        let cm = ConfusionMatrix {
            tp: 45,
            fp: 5,
            fn_: 10,
            tn: 40,
        };
        let m = core_metrics(&cm).unwrap();
        assert!((m.precision_pos - 0.9).abs() < 1e-12);
        assert!((m.recall_pos - 45.0 / 55.0).abs() < 1e-12);
        assert!((m.f_pos - 0.857142857).abs() < 1e-5);
        assert!((m.accuracy - 0.85).abs() < 1e-12);
        assert!(!m.has_undefined_ratios);
        assert!(m.f_weighted >= m.f_pos.min(m.f_neg) && m.f_weighted <= m.f_pos.max(m.f_neg));
    }

    #[test]
    fn perfect_and_degenerate_metrics() {
        let cm = ConfusionMatrix {
            tp: 8,
            tn: 2,
            fp: 0,
            fn_: 0,
        };
        let m = core_metrics(&cm).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.f_weighted, 1.0);

        // No predicted positives: precision_pos undefined -> 0, flagged.
        let cm = ConfusionMatrix {
            tp: 0,
            tn: 5,
            fp: 0,
            fn_: 5,
        };
        let m = core_metrics(&cm).unwrap();
        assert_eq!(m.precision_pos, 0.0);
        assert!(m.has_undefined_ratios);
    }

    #[test]
    fn probability_error_fixtures() {
        let p = vec![1.0, 1.0, 0.0];
        let y = vec![1, 1, -1];
        let e = probability_errors(&p, &y, 0.5).unwrap();
        assert_eq!((e.mae, e.rmse, e.rae), (0.0, 0.0, 0.0));

        let e = probability_errors(&[0.5, 0.5], &[1, -1], 0.25).unwrap();
        assert!((e.mae - 0.5).abs() < 1e-12);
        assert!((e.rmse - 0.5).abs() < 1e-12);

        let e = probability_errors(&[0.8, 0.3], &[1, -1], 0.5).unwrap();
        assert!((e.mae - 0.25).abs() < 1e-12);
        assert!((e.rmse - (0.065f64).sqrt()).abs() < 1e-12);
        assert!((e.rae - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rae_of_prior_predictor_is_one() {
        let labels: Vec<i8> = (0..20).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
        let prior = labels.iter().filter(|&&l| l > 0).count() as f64 / labels.len() as f64;
        let probs = vec![prior; labels.len()];
        let e = probability_errors(&probs, &labels, prior).unwrap();
        assert_eq!(e.rae, 1.0);
    }

    #[test]
    fn auc_rankings() {
        let labels = vec![-1, -1, 1, 1];
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &labels).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.9, 0.8, 0.2, 0.1], &labels).unwrap(), 0.0);
        assert_eq!(roc_auc(&[0.5, 0.5, 0.5, 0.5], &labels).unwrap(), 0.5);
        assert!(matches!(
            roc_auc(&[0.5, 0.6], &[1, 1]).unwrap_err(),
            EvalError::SingleClass
        ));
    }

    #[test]
    fn auc_invariant_under_monotone_transform() {
        let probs = vec![0.1, 0.4, 0.35, 0.8, 0.65, 0.2, 0.9, 0.5];
        let labels = vec![-1, 1, -1, 1, 1, -1, 1, -1];
        let a = roc_auc(&probs, &labels).unwrap();
        let squashed: Vec<f64> = probs.iter().map(|p| p.powi(3) * 0.5 + 0.1).collect();
        let b = roc_auc(&squashed, &labels).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn paired_t_hand_fixture() {
        // Differences: five 0.1s and five 0.2s -> t = 9, df = 9.
        let b = vec![0.5; 10];
        let a: Vec<f64> = (0..10)
            .map(|i| 0.5 + if i < 5 { 0.1 } else { 0.2 })
            .collect();
        let r = paired_t_test(&a, &b).unwrap();
        assert!((r.t.unwrap() - 9.0).abs() < 1e-9);
        assert_eq!(r.degrees_of_freedom, 9);
        assert!(r.significant_at_01 && r.significant_at_05);

        let swapped = paired_t_test(&b, &a).unwrap();
        assert!((swapped.t.unwrap() + 9.0).abs() < 1e-9);
    }

    #[test]
    fn paired_t_degenerate_and_insignificant() {
        let a = vec![0.7, 0.8, 0.9];
        let r = paired_t_test(&a, &a).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.t, None);
        assert!(!r.significant_at_05);

        let b = vec![0.71, 0.79, 0.91];
        let r = paired_t_test(&a, &b).unwrap();
        assert!(!r.degenerate);
        assert!(!r.significant_at_01);
    }

    #[test]
    fn independent_t_runs() {
        let a = vec![0.9, 0.85, 0.95, 0.88];
        let b = vec![0.5, 0.55, 0.45, 0.52];
        let r = independent_t_test(&a, &b).unwrap();
        assert_eq!(r.degrees_of_freedom, 6);
        assert!(r.t.unwrap() > 0.0);
        assert!(r.significant_at_01);
    }
}
