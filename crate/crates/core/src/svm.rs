//! Soft-margin SVM with polynomial and RBF kernels, trained by
//! sequential minimal optimization.
//!
//! The solver sweeps deterministically, alternating full-set passes with
//! passes over the non-bound multipliers, and picks the second index of
//! each working pair by the largest error gap with index-order
//! tie-breaking. There is no randomness anywhere: the same dataset always
//! produces the same multipliers, bias and predictions.

use serde::{Deserialize, Serialize};

use crate::classifiers::{check_training_set, check_vector, label_from_proba, ModelError};

/// Kernel function: `(x.z + 1)^d` or `exp(-gamma * |x - z|^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Kernel {
    Polynomial { degree: u32 },
    Rbf { gamma: f64 },
}

impl Kernel {
    fn validate(&self) -> Result<(), ModelError> {
        match self {
            Kernel::Polynomial { degree } if *degree >= 1 => Ok(()),
            Kernel::Polynomial { degree } => Err(ModelError::BadParams(format!(
                "polynomial degree must be >= 1, got {degree}"
            ))),
            Kernel::Rbf { gamma } if *gamma >= 0.0 && gamma.is_finite() => Ok(()),
            Kernel::Rbf { gamma } => Err(ModelError::BadParams(format!(
                "rbf gamma must be finite and >= 0, got {gamma}"
            ))),
        }
    }
}

impl std::fmt::Display for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kernel::Polynomial { degree } => write!(f, "poly(d={degree})"),
            Kernel::Rbf { gamma } => write!(f, "rbf(gamma={gamma})"),
        }
    }
}

/// Evaluates the kernel on two equal-length vectors.
pub fn kernel_eval(kernel: &Kernel, x: &[f64], z: &[f64]) -> Result<f64, ModelError> {
    if x.len() != z.len() {
        return Err(ModelError::DimensionMismatch {
            expected: x.len(),
            got: z.len(),
        });
    }
    Ok(kernel_eval_unchecked(kernel, x, z))
}

fn kernel_eval_unchecked(kernel: &Kernel, x: &[f64], z: &[f64]) -> f64 {
    match kernel {
        Kernel::Polynomial { degree } => {
            let dot: f64 = x.iter().zip(z).map(|(a, b)| a * b).sum();
            (dot + 1.0).powi(*degree as i32)
        }
        Kernel::Rbf { gamma } => {
            let dist2: f64 = x.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum();
            (-gamma * dist2).exp()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: Kernel,
    pub c: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_passes")]
    pub max_passes: usize,
}

fn default_tolerance() -> f64 {
    1e-3
}

fn default_max_passes() -> usize {
    10_000
}

impl SvmParams {
    pub fn new(kernel: Kernel, c: f64) -> Self {
        Self {
            kernel,
            c,
            tolerance: 1e-3,
            max_passes: 10_000,
        }
    }
}

/// Fitted SVM: support vectors with dual coefficients `alpha_i * y_i` and
/// the bias of the decision function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub params: SvmParams,
    pub support_vectors: Vec<Vec<f64>>,
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub feature_count: usize,
    pub converged: bool,
}

impl SvmModel {
    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    /// `f(x) = sum_i alpha_i y_i K(x_i, x) + b`.
    pub fn decision_function(&self, x: &[f64]) -> Result<f64, ModelError> {
        check_vector(x, self.feature_count)?;
        let mut f = self.bias;
        for (sv, coef) in self.support_vectors.iter().zip(&self.dual_coefs) {
            f += coef * kernel_eval_unchecked(&self.params.kernel, sv, x);
        }
        Ok(f)
    }

    /// Fixed logistic squash of the decision value; monotone in `f`, so
    /// the 0.5 threshold reproduces the sign rule (f = 0 counts as +1).
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, ModelError> {
        Ok(1.0 / (1.0 + (-self.decision_function(x)?).exp()))
    }

    pub fn predict(&self, x: &[f64]) -> Result<i8, ModelError> {
        Ok(label_from_proba(self.predict_proba(x)?))
    }
}

/// Full training result: the deployable model plus the per-row
/// multipliers and diagnostics used by the optimality audits.
#[derive(Debug, Clone)]
pub struct SmoOutcome {
    pub model: SvmModel,
    pub alphas: Vec<f64>,
    pub dual_objective: f64,
    /// Exact dual-objective gain of every accepted pair step.
    pub step_gains: Vec<f64>,
    pub converged: bool,
    pub sweeps: usize,
}

struct Smo<'a> {
    x: &'a [Vec<f64>],
    y: &'a [i8],
    kernel_matrix: Vec<Vec<f64>>,
    alphas: Vec<f64>,
    errors: Vec<f64>,
    bias: f64,
    c: f64,
    tolerance: f64,
    step_gains: Vec<f64>,
}

impl<'a> Smo<'a> {
    fn decision(&self, idx: usize) -> f64 {
        let mut f = self.bias;
        for (j, &alpha) in self.alphas.iter().enumerate() {
            if alpha > 0.0 {
                f += alpha * f64::from(self.y[j]) * self.kernel_matrix[j][idx];
            }
        }
        f
    }

    fn rebuild_errors(&mut self) {
        for i in 0..self.x.len() {
            self.errors[i] = self.decision(i) - f64::from(self.y[i]);
        }
    }

    fn non_bound(&self) -> Vec<usize> {
        (0..self.alphas.len())
            .filter(|&i| self.alphas[i] > 0.0 && self.alphas[i] < self.c)
            .collect()
    }

    fn violates_kkt(&self, i: usize) -> bool {
        let r = self.errors[i] * f64::from(self.y[i]);
        (r < -self.tolerance && self.alphas[i] < self.c)
            || (r > self.tolerance && self.alphas[i] > 0.0)
    }

    fn examine(&mut self, i: usize) -> bool {
        if !self.violates_kkt(i) {
            return false;
        }
        let non_bound = self.non_bound();
        // Heuristic second choice: largest |E_i - E_j| among non-bound
        // multipliers, lowest index on ties.
        let mut best: Option<(f64, usize)> = None;
        for &j in &non_bound {
            if j == i {
                continue;
            }
            let gap = (self.errors[i] - self.errors[j]).abs();
            if best.is_none_or(|(g, _)| gap > g) {
                best = Some((gap, j));
            }
        }
        if let Some((_, j)) = best {
            if self.try_step(i, j) {
                return true;
            }
        }
        // Deterministic fallbacks: non-bound in index order, then all.
        for &j in &non_bound {
            if j != i && self.try_step(i, j) {
                return true;
            }
        }
        for j in 0..self.x.len() {
            if j != i && self.try_step(i, j) {
                return true;
            }
        }
        false
    }

    fn try_step(&mut self, i: usize, j: usize) -> bool {
        let (ai, aj) = (self.alphas[i], self.alphas[j]);
        let (yi, yj) = (f64::from(self.y[i]), f64::from(self.y[j]));
        let (ei, ej) = (self.errors[i], self.errors[j]);
        let same_sign = yi * yj > 0.0;
        let (low, high) = if same_sign {
            ((ai + aj - self.c).max(0.0), (ai + aj).min(self.c))
        } else {
            ((aj - ai).max(0.0), (self.c + aj - ai).min(self.c))
        };
        if low >= high {
            return false;
        }
        let k_ii = self.kernel_matrix[i][i];
        let k_jj = self.kernel_matrix[j][j];
        let k_ij = self.kernel_matrix[i][j];
        let eta = k_ii + k_jj - 2.0 * k_ij;
        // First derivative of the dual along the constraint line at aj.
        let slope = yj * (ei - ej);

        let aj_new = if eta > 0.0 {
            (aj + slope / eta).clamp(low, high)
        } else {
            // Flat or concave-up section: the maximum sits at an endpoint.
            let delta = |a: f64| slope * (a - aj) - 0.5 * eta * (a - aj) * (a - aj);
            let (dl, dh) = (delta(low), delta(high));
            if dl > dh + 1e-12 {
                low
            } else if dh > dl + 1e-12 {
                high
            } else {
                return false;
            }
        };
        if (aj_new - aj).abs() < 1e-12 * (aj_new + aj + 1e-12) {
            return false;
        }
        let gain = slope * (aj_new - aj) - 0.5 * eta * (aj_new - aj) * (aj_new - aj);
        let ai_new = ai + yi * yj * (aj - aj_new);

        let delta_i = yi * (ai_new - ai);
        let delta_j = yj * (aj_new - aj);
        let b1 = self.bias - ei - delta_i * k_ii - delta_j * k_ij;
        let b2 = self.bias - ej - delta_i * k_ij - delta_j * k_jj;
        let new_bias = if ai_new > 0.0 && ai_new < self.c {
            b1
        } else if aj_new > 0.0 && aj_new < self.c {
            b2
        } else {
            (b1 + b2) / 2.0
        };
        let delta_b = new_bias - self.bias;
        for (t, err) in self.errors.iter_mut().enumerate() {
            *err += delta_i * self.kernel_matrix[i][t] + delta_j * self.kernel_matrix[j][t]
                + delta_b;
        }
        self.alphas[i] = ai_new;
        self.alphas[j] = aj_new;
        self.bias = new_bias;
        self.step_gains.push(gain);
        true
    }

    fn dual_objective(&self) -> f64 {
        let mut obj: f64 = self.alphas.iter().sum();
        for (i, &ai) in self.alphas.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            for (j, &aj) in self.alphas.iter().enumerate() {
                if aj != 0.0 {
                    obj -= 0.5
                        * ai
                        * aj
                        * f64::from(self.y[i])
                        * f64::from(self.y[j])
                        * self.kernel_matrix[i][j];
                }
            }
        }
        obj
    }
}

/// Trains the soft-margin dual by SMO. Terminates when a full pass finds
/// no tolerance-exceeding KKT violation, or at `max_passes` sweeps (the
/// `converged` flag records which).
pub fn train_smo(x: &[Vec<f64>], y: &[i8], params: &SvmParams) -> Result<SmoOutcome, ModelError> {
    let cols = check_training_set(x, y)?;
    params.kernel.validate()?;
    if params.c <= 0.0 || !params.c.is_finite() {
        return Err(ModelError::BadParams(format!("C must be > 0, got {}", params.c)));
    }
    if params.tolerance <= 0.0 {
        return Err(ModelError::BadParams("tolerance must be > 0".into()));
    }
    if params.max_passes == 0 {
        return Err(ModelError::BadParams("max_passes must be >= 1".into()));
    }
    if !y.contains(&1) {
        return Err(ModelError::MissingClass(1));
    }
    if !y.contains(&-1) {
        return Err(ModelError::MissingClass(-1));
    }

    let n = x.len();
    let mut kernel_matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = kernel_eval_unchecked(&params.kernel, &x[i], &x[j]);
            kernel_matrix[i][j] = v;
            kernel_matrix[j][i] = v;
        }
    }

    let mut smo = Smo {
        x,
        y,
        kernel_matrix,
        alphas: vec![0.0; n],
        errors: y.iter().map(|&l| -f64::from(l)).collect(),
        bias: 0.0,
        c: params.c,
        tolerance: params.tolerance,
        step_gains: Vec::new(),
    };

    let mut examine_all = true;
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < params.max_passes {
        sweeps += 1;
        let indices: Vec<usize> = if examine_all {
            // Refresh the error cache from scratch before each full pass
            // so accumulated drift cannot affect the stopping decision.
            smo.rebuild_errors();
            (0..n).collect()
        } else {
            smo.non_bound()
        };
        let mut changed = 0;
        for i in indices {
            if smo.examine(i) {
                changed += 1;
            }
        }
        if examine_all {
            if changed == 0 {
                converged = true;
                break;
            }
            examine_all = false;
        } else if changed == 0 {
            examine_all = true;
        }
    }

    let dual_objective = smo.dual_objective();
    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    for (idx, &alpha) in smo.alphas.iter().enumerate() {
        if alpha > 0.0 {
            support_vectors.push(x[idx].clone());
            dual_coefs.push(alpha * f64::from(y[idx]));
        }
    }
    Ok(SmoOutcome {
        model: SvmModel {
            params: params.clone(),
            support_vectors,
            dual_coefs,
            bias: smo.bias,
            feature_count: cols,
            converged,
        },
        alphas: smo.alphas,
        dual_objective,
        step_gains: smo.step_gains,
        converged,
        sweeps,
    })
}

/// Largest violation of the tolerance-relaxed KKT conditions over the
/// training set; 0 means the audit passes.
///
/// Conditions: `alpha = 0` requires `y f >= 1 - tol`; interior alphas
/// require `|y f - 1| <= tol`; `alpha = C` requires `y f <= 1 + tol`.
pub fn kkt_max_violation(
    x: &[Vec<f64>],
    y: &[i8],
    outcome: &SmoOutcome,
) -> Result<f64, ModelError> {
    let params = &outcome.model.params;
    let mut worst: f64 = 0.0;
    for ((row, &label), &alpha) in x.iter().zip(y).zip(&outcome.alphas) {
        let yf = f64::from(label) * outcome.model.decision_function(row)?;
        let excess = if alpha <= 0.0 {
            (1.0 - params.tolerance) - yf
        } else if alpha >= params.c {
            yf - (1.0 + params.tolerance)
        } else {
            (yf - 1.0).abs() - params.tolerance
        };
        worst = worst.max(excess);
    }
    Ok(worst)
}
