use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ColumnSchema, Dataset, Matrix};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// How per-feature correlations with the latent class sign are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum CorrelationSource {
    /// `|rho|` uniform on `[min_abs, max_abs]` with a random sign. With
    /// `min_abs = 0` this is `rho ~ U(-max_abs, max_abs)`.
    Uniform { min_abs: f64, max_abs: f64 },
    /// Fixed correlations, one per feature.
    Fixed { values: Vec<f64> },
}

impl Default for CorrelationSource {
    fn default() -> Self {
        CorrelationSource::Uniform {
            min_abs: 0.0,
            max_abs: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub n_features: usize,
    pub n_samples: usize,
    #[serde(default)]
    pub correlations: CorrelationSource,
}

impl SimulationSpec {
    pub fn new(n_features: usize, n_samples: usize) -> Self {
        Self {
            n_features,
            n_samples,
            correlations: CorrelationSource::default(),
        }
    }

    /// Correlation magnitudes drawn from `[min_abs, 0.7]`.
    pub fn with_min_abs(mut self, min_abs: f64) -> Self {
        self.correlations = CorrelationSource::Uniform {
            min_abs,
            max_abs: 0.7,
        };
        self
    }
}

#[derive(Debug, Clone)]
pub struct Simulated {
    pub data: Dataset,
    pub correlations: Vec<f64>,
}

/// Balanced binary labels with Gaussian features correlated to the label.
///
/// `y ~ Bernoulli(0.5)`, `z = 2y - 1`, and for each feature
/// `x_i = rho_i * z + sqrt(1 - rho_i^2) * eps` with `eps ~ N(0, 1)`, so every
/// feature has unit variance.
pub fn simulate_dataset(n_features: usize, n_samples: usize, seed: u64) -> Result<Dataset> {
    Ok(simulate_with(&SimulationSpec::new(n_features, n_samples), seed)?.data)
}

pub fn simulate_with(spec: &SimulationSpec, seed: u64) -> Result<Simulated> {
    let d = spec.n_features;
    let n = spec.n_samples;
    if d == 0 {
        return Err(Error::InvalidInput("need at least one feature".into()));
    }
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let mut rng = rng_from_seed(derive_seed(seed, "simulate/correlations"));
    let correlations: Vec<f64> = match &spec.correlations {
        CorrelationSource::Uniform { min_abs, max_abs } => {
            if !(0.0 <= *min_abs && min_abs <= max_abs && *max_abs < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "correlation range [{min_abs}, {max_abs}] invalid"
                )));
            }
            (0..d)
                .map(|_| {
                    if *min_abs == 0.0 {
                        rng.random_range(-*max_abs..=*max_abs)
                    } else {
                        let m = rng.random_range(*min_abs..=*max_abs);
                        if rng.random_bool(0.5) {
                            m
                        } else {
                            -m
                        }
                    }
                })
                .collect()
        }
        CorrelationSource::Fixed { values } => {
            if values.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: values.len(),
                });
            }
            if values.iter().any(|r| r.is_nan() || r.abs() > 1.0) {
                return Err(Error::InvalidInput(
                    "correlations must lie in [-1, 1]".into(),
                ));
            }
            values.clone()
        }
    };

    let mut rng = rng_from_seed(derive_seed(seed, "simulate/rows"));
    let mut labels = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let y: u8 = u8::from(rng.random_bool(0.5));
        let z = if y == 1 { 1.0 } else { -1.0 };
        labels.push(y);
        for rho in &correlations {
            let eps: f64 = rng.sample(StandardNormal);
            data.push(rho * z + (1.0 - rho * rho).sqrt() * eps);
        }
    }
    let schema = (0..d)
        .map(|j| ColumnSchema::continuous(format!("x{j}"), j))
        .collect();
    let data = Dataset::with_sequential_ids(schema, Matrix::new(n, d, data)?, labels)?;
    Ok(Simulated { data, correlations })
}
