//! Maximum-likelihood logistic regression fitted by iteratively
//! reweighted least squares (Newton steps with step halving, so the
//! log-likelihood never decreases).
//!
//! Separable data has no finite maximizer; training then runs to the
//! iteration cap and reports `converged = false`. An optional L2 penalty
//! (intercept excluded) is available for such cases.

use serde::{Deserialize, Serialize};

use super::{check_training_set, ModelError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrParams {
    pub max_iterations: usize,
    pub tolerance: f64,
    /// L2 penalty strength; 0 disables regularization.
    pub l2: f64,
}

impl Default for LrParams {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-8,
            l2: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Numerically stable ln(1 + e^z).
fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else if z < -30.0 {
        z.exp()
    } else {
        z.exp().ln_1p()
    }
}

impl LrModel {
    pub fn feature_count(&self) -> usize {
        self.weights.len()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.intercept
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.score(x))
    }
}

/// Solves `a * x = b` in place by Gaussian elimination with partial
/// pivoting; the systems here are at most (features + 1) square.
#[allow(clippy::needless_range_loop)]
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

/// Penalized log-likelihood of the {0,1} targets.
fn log_likelihood(x: &[Vec<f64>], targets: &[f64], beta: &[f64], l2: f64) -> f64 {
    let d = beta.len() - 1;
    let mut ll = 0.0;
    for (row, &t) in x.iter().zip(targets) {
        let z: f64 = row.iter().zip(beta).map(|(v, b)| v * b).sum::<f64>() + beta[d];
        // t*ln(p) + (1-t)*ln(1-p) rewritten through softplus.
        ll += t * z - softplus(z);
    }
    ll - 0.5 * l2 * beta[..d].iter().map(|b| b * b).sum::<f64>()
}

#[allow(clippy::needless_range_loop)]
pub fn train_lr(x: &[Vec<f64>], y: &[i8], params: &LrParams) -> Result<LrModel, ModelError> {
    let cols = check_training_set(x, y)?;
    if params.max_iterations == 0 {
        return Err(ModelError::BadParams("max_iterations must be >= 1".into()));
    }
    if params.tolerance <= 0.0 {
        return Err(ModelError::BadParams("tolerance must be > 0".into()));
    }
    if params.l2 < 0.0 {
        return Err(ModelError::BadParams("l2 must be >= 0".into()));
    }

    let targets: Vec<f64> = y.iter().map(|&l| if l > 0 { 1.0 } else { 0.0 }).collect();
    // beta = [weights..., intercept]; the intercept is never penalized.
    let dim = cols + 1;
    let mut beta = vec![0.0; dim];
    let mut ll = log_likelihood(x, &targets, &beta, params.l2);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..params.max_iterations {
        iterations = iter + 1;
        // Gradient and Hessian of the penalized log-likelihood.
        let mut grad = vec![0.0; dim];
        let mut hess = vec![vec![0.0; dim]; dim];
        for (row, &t) in x.iter().zip(&targets) {
            let z: f64 = row.iter().zip(&beta).map(|(v, b)| v * b).sum::<f64>() + beta[cols];
            let p = sigmoid(z);
            let residual = t - p;
            let weight = (p * (1.0 - p)).max(1e-12);
            let augmented = |k: usize| if k == cols { 1.0 } else { row[k] };
            for i in 0..dim {
                grad[i] += residual * augmented(i);
                for j in i..dim {
                    hess[i][j] += weight * augmented(i) * augmented(j);
                }
            }
        }
        for i in 0..cols {
            grad[i] -= params.l2 * beta[i];
            hess[i][i] += params.l2;
        }
        for i in 0..dim {
            for j in 0..i {
                hess[i][j] = hess[j][i];
            }
        }

        let Some(step) = solve_linear(hess, grad.clone()) else {
            break;
        };

        // Step halving keeps the log-likelihood non-decreasing.
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate: Vec<f64> = beta
                .iter()
                .zip(&step)
                .map(|(b, s)| b + scale * s)
                .collect();
            let candidate_ll = log_likelihood(x, &targets, &candidate, params.l2);
            if candidate_ll >= ll {
                let max_move = step.iter().map(|s| (scale * s).abs()).fold(0.0, f64::max);
                beta = candidate;
                ll = candidate_ll;
                accepted = true;
                if max_move <= params.tolerance {
                    converged = true;
                }
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            // No ascent direction left at this scale: treat as converged.
            converged = true;
        }
        if converged {
            break;
        }
    }

    let intercept = beta[cols];
    beta.truncate(cols);
    Ok(LrModel {
        weights: beta,
        intercept,
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_data_gives_zero_intercept() {
        // Symmetric under (x, y) -> (-x, -y) and not separable.
        let x = vec![vec![1.0], vec![-1.0], vec![3.0], vec![-3.0]];
        let y = vec![1, -1, -1, 1];
        let model = train_lr(&x, &y, &LrParams::default()).unwrap();
        assert!(model.intercept.abs() < 1e-6, "intercept {}", model.intercept);
        assert!((model.probability(&[0.0]) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn two_level_design_matches_closed_form() {
        // x = 0: two up, one down -> p0 = 2/3; x = 1: one up, two down ->
        // p1 = 1/3. Hence intercept = ln 2 and slope = -2 ln 2.
        let x = vec![
            vec![0.0],
            vec![0.0],
            vec![0.0],
            vec![1.0],
            vec![1.0],
            vec![1.0],
        ];
        let y = vec![1, 1, -1, 1, -1, -1];
        let model = train_lr(&x, &y, &LrParams::default()).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!(model.converged);
        assert!((model.intercept - ln2).abs() < 1e-6, "b = {}", model.intercept);
        assert!(
            (model.weights[0] + 2.0 * ln2).abs() < 1e-6,
            "w = {}",
            model.weights[0]
        );
    }

    #[test]
    fn boundary_point_scores_half() {
        let x = vec![vec![0.0], vec![0.0], vec![1.0], vec![1.0], vec![2.0], vec![2.0]];
        let y = vec![-1, -1, -1, 1, 1, 1];
        let model = train_lr(&x, &y, &LrParams::default()).unwrap();
        let boundary = -model.intercept / model.weights[0];
        assert!((model.probability(&[boundary]) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn log_likelihood_never_decreases() {
        let x: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.61).cos()])
            .collect();
        let y: Vec<i8> = (0..30)
            .map(|i| if (i * 7) % 5 < 2 { 1 } else { -1 })
            .collect();
        let targets: Vec<f64> = y.iter().map(|&l| if l > 0 { 1.0 } else { 0.0 }).collect();

        let mut previous = f64::NEG_INFINITY;
        for iters in 1..=12 {
            let model = train_lr(
                &x,
                &y,
                &LrParams {
                    max_iterations: iters,
                    tolerance: 1e-14,
                    l2: 0.0,
                },
            )
            .unwrap();
            let mut beta = model.weights.clone();
            beta.push(model.intercept);
            let ll = log_likelihood(&x, &targets, &beta, 0.0);
            assert!(
                ll >= previous - 1e-12,
                "log-likelihood decreased: {previous} -> {ll}"
            );
            previous = ll;
        }
    }

    #[test]
    fn separable_data_stops_at_cap_without_convergence() {
        let x = vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]];
        let y = vec![-1, -1, 1, 1];
        let model = train_lr(
            &x,
            &y,
            &LrParams {
                max_iterations: 25,
                tolerance: 1e-10,
                l2: 0.0,
            },
        )
        .unwrap();
        assert!(!model.converged);
        assert_eq!(model.iterations, 25);
        // The direction is still right.
        assert!(model.probability(&[2.0]) > 0.99);
        assert!(model.probability(&[-2.0]) < 0.01);
    }

    #[test]
    fn label_invariant_under_positive_score_rescaling() {
        let x = vec![vec![0.5, 1.0], vec![1.5, -1.0], vec![-0.5, 0.3], vec![-1.2, 0.8]];
        let y = vec![1, 1, -1, -1];
        let model = train_lr(&x, &y, &LrParams::default()).unwrap();
        let scaled = LrModel {
            weights: model.weights.iter().map(|w| 3.7 * w).collect(),
            intercept: 3.7 * model.intercept,
            converged: model.converged,
            iterations: model.iterations,
        };
        for row in &x {
            let a = super::super::label_from_proba(model.probability(row));
            let b = super::super::label_from_proba(scaled.probability(row));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn l2_shrinks_weights() {
        let x = vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]];
        let y = vec![-1, -1, 1, 1];
        let plain = train_lr(
            &x,
            &y,
            &LrParams {
                max_iterations: 50,
                ..Default::default()
            },
        )
        .unwrap();
        let ridge = train_lr(
            &x,
            &y,
            &LrParams {
                max_iterations: 50,
                tolerance: 1e-8,
                l2: 1.0,
            },
        )
        .unwrap();
        assert!(ridge.weights[0].abs() < plain.weights[0].abs());
        assert!(ridge.converged);
    }
}
