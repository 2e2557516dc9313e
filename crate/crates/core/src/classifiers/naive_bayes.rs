//! Naive Bayes with factorized Gaussian or multivariate Bernoulli
//! likelihoods.
//!
//! Class priors come from training frequencies. The Gaussian variant
//! floors per-feature variances so constant columns stay finite; the
//! Bernoulli variant maps ±1 features to {1, 0} and applies Laplace
//! smoothing to the per-class rates.

use serde::{Deserialize, Serialize};

use super::{check_training_set, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NbVariant {
    Gaussian,
    Bernoulli,
}

impl std::fmt::Display for NbVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NbVariant::Gaussian => f.write_str("gaussian"),
            NbVariant::Bernoulli => f.write_str("bernoulli"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbParams {
    pub variant: NbVariant,
    /// Lower bound on Gaussian per-feature variances.
    #[serde(default = "default_variance_floor")]
    pub variance_floor: f64,
    /// Laplace smoothing for Bernoulli rates.
    #[serde(default = "default_laplace_alpha")]
    pub laplace_alpha: f64,
}

fn default_variance_floor() -> f64 {
    1e-9
}

fn default_laplace_alpha() -> f64 {
    1.0
}

impl NbParams {
    pub fn gaussian() -> Self {
        Self {
            variant: NbVariant::Gaussian,
            variance_floor: 1e-9,
            laplace_alpha: 1.0,
        }
    }

    pub fn bernoulli() -> Self {
        Self {
            variant: NbVariant::Bernoulli,
            ..Self::gaussian()
        }
    }
}

/// Per-class likelihood statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NbDistribution {
    Gaussian {
        mean_pos: Vec<f64>,
        var_pos: Vec<f64>,
        mean_neg: Vec<f64>,
        var_neg: Vec<f64>,
    },
    Bernoulli {
        rate_pos: Vec<f64>,
        rate_neg: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub prior_pos: f64,
    pub distribution: NbDistribution,
}

impl NbModel {
    pub fn feature_count(&self) -> usize {
        match &self.distribution {
            NbDistribution::Gaussian { mean_pos, .. } => mean_pos.len(),
            NbDistribution::Bernoulli { rate_pos, .. } => rate_pos.len(),
        }
    }

    fn class_log_likelihood(&self, x: &[f64], positive: bool) -> f64 {
        let prior = if positive {
            self.prior_pos
        } else {
            1.0 - self.prior_pos
        };
        let mut ll = prior.ln();
        match &self.distribution {
            NbDistribution::Gaussian {
                mean_pos,
                var_pos,
                mean_neg,
                var_neg,
            } => {
                let (means, vars) = if positive {
                    (mean_pos, var_pos)
                } else {
                    (mean_neg, var_neg)
                };
                for ((&v, &mean), &var) in x.iter().zip(means).zip(vars) {
                    ll += -0.5 * ((v - mean).powi(2) / var
                        + var.ln()
                        + (2.0 * std::f64::consts::PI).ln());
                }
            }
            NbDistribution::Bernoulli { rate_pos, rate_neg } => {
                let rates = if positive { rate_pos } else { rate_neg };
                for (&v, &rate) in x.iter().zip(rates) {
                    ll += if v > 0.0 { rate.ln() } else { (1.0 - rate).ln() };
                }
            }
        }
        ll
    }

    /// Posterior P(+1 | x); the two class posteriors sum to one.
    pub fn posterior_pos(&self, x: &[f64]) -> Result<f64, ModelError> {
        if matches!(self.distribution, NbDistribution::Bernoulli { .. }) {
            for &v in x {
                if v != 1.0 && v != -1.0 {
                    return Err(ModelError::NonSignFeature(v));
                }
            }
        }
        let lp = self.class_log_likelihood(x, true);
        let ln = self.class_log_likelihood(x, false);
        // sigma(lp - ln) = exp(lp) / (exp(lp) + exp(ln)), computed stably.
        Ok(1.0 / (1.0 + (ln - lp).exp()))
    }
}

pub fn train_nb(x: &[Vec<f64>], y: &[i8], params: &NbParams) -> Result<NbModel, ModelError> {
    let cols = check_training_set(x, y)?;
    if params.variance_floor <= 0.0 {
        return Err(ModelError::BadParams("variance_floor must be > 0".into()));
    }
    if params.laplace_alpha < 0.0 {
        return Err(ModelError::BadParams("laplace_alpha must be >= 0".into()));
    }
    let n_pos = y.iter().filter(|&&l| l > 0).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 {
        return Err(ModelError::MissingClass(1));
    }
    if n_neg == 0 {
        return Err(ModelError::MissingClass(-1));
    }
    let prior_pos = n_pos as f64 / y.len() as f64;

    let class_rows = |positive: bool| -> Vec<&Vec<f64>> {
        x.iter()
            .zip(y)
            .filter(|(_, &l)| (l > 0) == positive)
            .map(|(r, _)| r)
            .collect()
    };

    let distribution = match params.variant {
        NbVariant::Gaussian => {
            let stats = |rows: &[&Vec<f64>]| -> (Vec<f64>, Vec<f64>) {
                let m = rows.len() as f64;
                let mut means = vec![0.0; cols];
                for row in rows {
                    for (acc, &v) in means.iter_mut().zip(row.iter()) {
                        *acc += v;
                    }
                }
                for mean in &mut means {
                    *mean /= m;
                }
                let mut vars = vec![0.0; cols];
                for row in rows {
                    for ((acc, &v), &mean) in vars.iter_mut().zip(row.iter()).zip(&means) {
                        *acc += (v - mean).powi(2);
                    }
                }
                for var in &mut vars {
                    *var = (*var / m).max(params.variance_floor);
                }
                (means, vars)
            };
            let (mean_pos, var_pos) = stats(&class_rows(true));
            let (mean_neg, var_neg) = stats(&class_rows(false));
            NbDistribution::Gaussian {
                mean_pos,
                var_pos,
                mean_neg,
                var_neg,
            }
        }
        NbVariant::Bernoulli => {
            for row in x {
                for &v in row {
                    if v != 1.0 && v != -1.0 {
                        return Err(ModelError::NonSignFeature(v));
                    }
                }
            }
            let rates = |rows: &[&Vec<f64>]| -> Vec<f64> {
                let m = rows.len() as f64;
                (0..cols)
                    .map(|c| {
                        let ones = rows.iter().filter(|r| r[c] > 0.0).count() as f64;
                        (ones + params.laplace_alpha) / (m + 2.0 * params.laplace_alpha)
                    })
                    .collect()
            };
            NbDistribution::Bernoulli {
                rate_pos: rates(&class_rows(true)),
                rate_neg: rates(&class_rows(false)),
            }
        }
    };
    Ok(NbModel {
        prior_pos,
        distribution,
    })
}
