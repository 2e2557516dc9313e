//! Single-hidden-layer perceptron trained by online backpropagation with
//! momentum.
//!
//! Hidden units are tanh, the output unit is logistic, and the per-sample
//! loss is squared error against a {0, 1} target. Weights start uniform
//! in [-0.5, 0.5] and the sample order is reshuffled every epoch, both
//! from the seeded generator, so training is fully reproducible.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_training_set, ModelError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden_neurons: usize,
    pub epochs: usize,
    pub momentum: f64,
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden_neurons: 6,
            epochs: 500,
            momentum: 0.2,
            learning_rate: 0.3,
            seed: 0,
        }
    }
}

/// Fitted network weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    /// Hidden-layer weights, one row per hidden unit.
    pub w_hidden: Vec<Vec<f64>>,
    pub b_hidden: Vec<f64>,
    pub w_output: Vec<f64>,
    pub b_output: f64,
    pub params: MlpParams,
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl MlpModel {
    pub fn feature_count(&self) -> usize {
        self.w_hidden.first().map_or(0, Vec::len)
    }

    fn hidden_activations(&self, x: &[f64]) -> Vec<f64> {
        self.w_hidden
            .iter()
            .zip(&self.b_hidden)
            .map(|(w, b)| {
                let z: f64 = w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
                z.tanh()
            })
            .collect()
    }

    /// Output probability for the +1 class.
    pub fn forward(&self, x: &[f64]) -> f64 {
        let hidden = self.hidden_activations(x);
        let z: f64 = self
            .w_output
            .iter()
            .zip(&hidden)
            .map(|(w, h)| w * h)
            .sum::<f64>()
            + self.b_output;
        logistic(z)
    }

    /// Squared-error loss `0.5 * (output - target)^2` for one sample.
    pub fn sample_loss(&self, x: &[f64], target01: f64) -> f64 {
        0.5 * (self.forward(x) - target01).powi(2)
    }

    /// Analytic gradient of [`Self::sample_loss`] in the flat parameter
    /// layout of [`Self::flat_params`].
    pub fn sample_gradient(&self, x: &[f64], target01: f64) -> Vec<f64> {
        let hidden = self.hidden_activations(x);
        let z_out: f64 = self
            .w_output
            .iter()
            .zip(&hidden)
            .map(|(w, h)| w * h)
            .sum::<f64>()
            + self.b_output;
        let output = logistic(z_out);
        let delta_out = (output - target01) * output * (1.0 - output);

        let mut grad = Vec::with_capacity(self.parameter_count());
        for (j, (w_row, h)) in self.w_hidden.iter().zip(&hidden).enumerate() {
            let delta_h = delta_out * self.w_output[j] * (1.0 - h * h);
            for xi in x.iter().take(w_row.len()) {
                grad.push(delta_h * xi);
            }
        }
        for (j, h) in hidden.iter().enumerate() {
            let delta_h = delta_out * self.w_output[j] * (1.0 - h * h);
            grad.push(delta_h);
        }
        for h in &hidden {
            grad.push(delta_out * h);
        }
        grad.push(delta_out);
        grad
    }

    pub fn parameter_count(&self) -> usize {
        let d = self.feature_count();
        let n = self.w_hidden.len();
        n * d + n + n + 1
    }

    /// Weights flattened as hidden rows, hidden biases, output weights,
    /// output bias.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.parameter_count());
        for row in &self.w_hidden {
            flat.extend_from_slice(row);
        }
        flat.extend_from_slice(&self.b_hidden);
        flat.extend_from_slice(&self.w_output);
        flat.push(self.b_output);
        flat
    }

    /// Inverse of [`Self::flat_params`].
    pub fn set_flat_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.parameter_count());
        let mut it = flat.iter().copied();
        for row in &mut self.w_hidden {
            for w in row.iter_mut() {
                *w = it.next().unwrap();
            }
        }
        for b in &mut self.b_hidden {
            *b = it.next().unwrap();
        }
        for w in &mut self.w_output {
            *w = it.next().unwrap();
        }
        self.b_output = it.next().unwrap();
    }
}

/// Trains the network with per-sample gradient descent plus momentum for
/// the configured number of epochs.
pub fn train_mlp(x: &[Vec<f64>], y: &[i8], params: &MlpParams) -> Result<MlpModel, ModelError> {
    let cols = check_training_set(x, y)?;
    if params.hidden_neurons == 0 {
        return Err(ModelError::BadParams("hidden_neurons must be >= 1".into()));
    }
    if params.learning_rate <= 0.0 || !(0.0..1.0).contains(&params.momentum) {
        return Err(ModelError::BadParams(
            "learning_rate must be > 0 and momentum in [0, 1)".into(),
        ));
    }

    let n = params.hidden_neurons;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut uniform = || rng.gen_range(-0.5..=0.5);
    let mut model = MlpModel {
        w_hidden: (0..n)
            .map(|_| (0..cols).map(|_| uniform()).collect())
            .collect(),
        b_hidden: (0..n).map(|_| uniform()).collect(),
        w_output: (0..n).map(|_| uniform()).collect(),
        b_output: uniform(),
        params: params.clone(),
    };

    let targets: Vec<f64> = y.iter().map(|&l| if l > 0 { 1.0 } else { 0.0 }).collect();
    let mut velocity = vec![0.0; model.parameter_count()];
    let mut order: Vec<usize> = (0..x.len()).collect();

    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &idx in &order {
            let grad = model.sample_gradient(&x[idx], targets[idx]);
            let mut flat = model.flat_params();
            for ((w, v), g) in flat.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = params.momentum * *v - params.learning_rate * g;
                *w += *v;
            }
            model.set_flat_params(&flat);
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor_data() -> (Vec<Vec<f64>>, Vec<i8>) {
        (
            vec![
                vec![-1.0, -1.0],
                vec![-1.0, 1.0],
                vec![1.0, -1.0],
                vec![1.0, 1.0],
            ],
            vec![-1, 1, 1, -1],
        )
    }

    #[test]
    fn learns_xor() {
        let (x, y) = xor_data();
        let params = MlpParams {
            hidden_neurons: 4,
            epochs: 2000,
            momentum: 0.2,
            learning_rate: 0.3,
            seed: 42,
        };
        let model = train_mlp(&x, &y, &params).unwrap();
        for (row, &label) in x.iter().zip(&y) {
            let p = model.forward(row);
            assert_eq!(super::super::label_from_proba(p), label, "row {row:?} p={p}");
        }
    }

    #[test]
    fn converges_to_single_point_label() {
        let x = vec![vec![0.3, -0.7]; 8];
        let y = vec![1; 8];
        let params = MlpParams {
            hidden_neurons: 3,
            epochs: 500,
            momentum: 0.1,
            learning_rate: 0.3,
            seed: 1,
        };
        let model = train_mlp(&x, &y, &params).unwrap();
        assert!(model.forward(&x[0]) > 0.9);
    }

    #[test]
    fn identical_seeds_give_identical_weights() {
        let (x, y) = xor_data();
        let params = MlpParams {
            hidden_neurons: 5,
            epochs: 50,
            momentum: 0.3,
            learning_rate: 0.2,
            seed: 7,
        };
        let a = train_mlp(&x, &y, &params).unwrap();
        let b = train_mlp(&x, &y, &params).unwrap();
        assert_eq!(a, b);

        let other = train_mlp(
            &x,
            &y,
            &MlpParams {
                seed: 8,
                ..params
            },
        )
        .unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn flat_params_roundtrip() {
        let (x, y) = xor_data();
        let mut model = train_mlp(&x, &y, &MlpParams::default()).unwrap();
        let flat = model.flat_params();
        assert_eq!(flat.len(), model.parameter_count());
        let copy = model.clone();
        model.set_flat_params(&flat);
        assert_eq!(model, copy);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = xor_data();
        let model = train_mlp(
            &x,
            &y,
            &MlpParams {
                hidden_neurons: 3,
                epochs: 5,
                momentum: 0.0,
                learning_rate: 0.1,
                seed: 99,
            },
        )
        .unwrap();
        let target = if y[1] > 0 { 1.0 } else { 0.0 };
        let analytic = model.sample_gradient(&x[1], target);
        let flat = model.flat_params();
        let step = 1e-5;
        let mut numeric = Vec::with_capacity(flat.len());
        for i in 0..flat.len() {
            let mut probe = model.clone();
            let mut plus = flat.clone();
            plus[i] += step;
            probe.set_flat_params(&plus);
            let up = probe.sample_loss(&x[1], target);
            let mut minus = flat.clone();
            minus[i] -= step;
            probe.set_flat_params(&minus);
            let down = probe.sample_loss(&x[1], target);
            numeric.push((up - down) / (2.0 * step));
        }
        let dot_diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt()
            + numeric.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(dot_diff / scale < 1e-6, "relative error {}", dot_diff / scale);
    }

    #[test]
    fn rejects_bad_params() {
        let (x, y) = xor_data();
        assert!(train_mlp(
            &x,
            &y,
            &MlpParams {
                hidden_neurons: 0,
                ..Default::default()
            }
        )
        .is_err());
        assert!(train_mlp(
            &x,
            &y,
            &MlpParams {
                momentum: 1.0,
                ..Default::default()
            }
        )
        .is_err());
    }
}
