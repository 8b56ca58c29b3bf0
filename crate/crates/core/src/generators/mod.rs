//! Lightweight tabular generators and profile-segmented generation.
//!
//! * `chow_liu_bn`: discretizes continuous columns into quantile bins, learns
//!   a maximum mutual-information spanning tree rooted at the label and
//!   samples ancestrally, drawing continuous values uniformly within the
//!   sampled bin.
//! * `gmm`: per-class diagonal Gaussian mixture fitted by EM.
//! * `marginal_hist`: per-class independent marginals. Continuous columns use
//!   quantile-bin histograms with a small quantile sketch inside every bin.
//!
//! All generators draw the label from the empirical training prior.

mod binning;
mod bn;
mod gmm;
mod hist;
mod segmented;

pub use bn::{BnModel, BnNode};
pub use gmm::{GmmModel, Mixture};
pub use hist::{HistModel, Marginal};
pub use segmented::{
    apportion, apportion_fractions, fit_segmented, Segment, SegmentModel, SegmentedGenerator,
};

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, ColumnSchema, Dataset, Matrix};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    ChowLiuBn,
    Gmm,
    MarginalHist,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 3] = [
        GeneratorKind::ChowLiuBn,
        GeneratorKind::Gmm,
        GeneratorKind::MarginalHist,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::ChowLiuBn => "chow_liu_bn",
            GeneratorKind::Gmm => "gmm",
            GeneratorKind::MarginalHist => "marginal_hist",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GeneratorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown generator {s:?}")))
    }
}

pub const DEFAULT_BINS: usize = 8;
pub const DEFAULT_COMPONENTS: usize = 3;

fn default_bins() -> usize {
    DEFAULT_BINS
}
fn default_components() -> usize {
    DEFAULT_COMPONENTS
}
fn default_alpha() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    /// Quantile bins per continuous column (bn, hist).
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Mixture components per class (gmm).
    #[serde(default = "default_components")]
    pub components: usize,
    /// Additive smoothing for tables.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, seed: u64) -> Self {
        Self {
            kind,
            bins: DEFAULT_BINS,
            components: DEFAULT_COMPONENTS,
            alpha: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::InvalidConfig(format!(
                "bins must be at least 2, got {}",
                self.bins
            )));
        }
        if self.components < 1 {
            return Err(Error::InvalidConfig("components must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorModel {
    ChowLiuBn(BnModel),
    Gmm(GmmModel),
    MarginalHist(HistModel),
}

/// A generator fitted on one dataset. Immutable; sampling is pure in the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedGenerator {
    spec: GeneratorSpec,
    schema: Vec<ColumnSchema>,
    n_train: usize,
    /// Empirical probability of class 1.
    class1_prior: f64,
    model: GeneratorModel,
}

/// Fits `spec` on `data`.
pub fn fit_generator(spec: &GeneratorSpec, data: &Dataset) -> Result<FittedGenerator> {
    spec.validate()?;
    if data.n() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: data.n(),
        });
    }
    let counts = data.class_counts();
    let class1_prior = counts[1] as f64 / data.n() as f64;
    let model = match spec.kind {
        GeneratorKind::ChowLiuBn => {
            GeneratorModel::ChowLiuBn(BnModel::fit(data, spec.bins, spec.alpha))
        }
        GeneratorKind::Gmm => GeneratorModel::Gmm(GmmModel::fit(data, spec.components, spec.seed)),
        GeneratorKind::MarginalHist => {
            GeneratorModel::MarginalHist(HistModel::fit(data, spec.bins, spec.alpha))
        }
    };
    Ok(FittedGenerator {
        spec: spec.clone(),
        schema: data.schema().to_vec(),
        n_train: data.n(),
        class1_prior,
        model,
    })
}

impl FittedGenerator {
    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn class1_prior(&self) -> f64 {
        self.class1_prior
    }

    pub fn model(&self) -> &GeneratorModel {
        &self.model
    }

    /// Draws `n` rows with ids `0..n`.
    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        let mut rng = rng_from_seed(seed);
        let (values, labels) = self.sample_raw(n, &mut rng);
        Dataset::with_sequential_ids(
            self.schema.clone(),
            Matrix::new(n, self.schema.len(), values).expect("row-major buffer"),
            labels,
        )
        .expect("generated rows satisfy the training schema")
    }

    pub(crate) fn sample_raw(&self, n: usize, rng: &mut Rng) -> (Vec<f64>, Vec<u8>) {
        let d = self.schema.len();
        let mut values = vec![0.0; n * d];
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let row = &mut values[i * d..(i + 1) * d];
            let y = match &self.model {
                GeneratorModel::ChowLiuBn(m) => m.sample_row(row, rng),
                GeneratorModel::Gmm(m) => {
                    let y = draw_label(self.class1_prior, rng);
                    m.sample_row(y, row, rng);
                    y
                }
                GeneratorModel::MarginalHist(m) => {
                    let y = draw_label(self.class1_prior, rng);
                    m.sample_row(y, row, rng);
                    y
                }
            };
            coerce_row(&self.schema, row);
            labels.push(y);
        }
        (values, labels)
    }
}

pub(crate) fn draw_label(class1_prior: f64, rng: &mut Rng) -> u8 {
    u8::from(rng.random::<f64>() < class1_prior)
}

/// Index drawn from a probability vector by inverse CDF.
pub(crate) fn draw_index(probs: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Rounds and clamps categorical cells into their code range.
fn coerce_row(schema: &[ColumnSchema], row: &mut [f64]) {
    for c in schema {
        if let ColumnKind::Categorical { cardinality } = c.kind {
            let v = row[c.index];
            let code = if v.is_finite() { v.round() } else { 0.0 };
            row[c.index] = code.clamp(0.0, (cardinality - 1) as f64);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::simulate_dataset;

    #[test]
    fn spec_validation() {
        assert!(GeneratorSpec::new(GeneratorKind::Gmm, 0).validate().is_ok());
        let mut s = GeneratorSpec::new(GeneratorKind::ChowLiuBn, 0);
        s.bins = 1;
        assert!(s.validate().is_err());
        s.bins = 8;
        s.alpha = 0.0;
        assert!(s.validate().is_err());
        for k in GeneratorKind::ALL {
            assert_eq!(k.name().parse::<GeneratorKind>().unwrap(), k);
        }
    }

    #[test]
    fn every_kind_samples_valid_data() {
        let data = simulate_dataset(4, 300, 3).unwrap();
        for kind in GeneratorKind::ALL {
            let g = fit_generator(&GeneratorSpec::new(kind, 1), &data).unwrap();
            let s = g.sample(200, 9);
            assert_eq!(s.n(), 200);
            assert_eq!(s.schema(), data.schema());
            assert_eq!(s, g.sample(200, 9));
            let empty = g.sample(0, 9);
            assert!(empty.is_empty());
            assert_eq!(empty.schema(), data.schema());
        }
    }

    #[test]
    fn too_few_rows() {
        let data = simulate_dataset(2, 20, 0).unwrap().subset(&[0]);
        assert!(fit_generator(&GeneratorSpec::new(GeneratorKind::MarginalHist, 0), &data).is_err());
    }

    #[test]
    fn draw_index_respects_zero_mass() {
        let mut rng = rng_from_seed(1);
        for _ in 0..200 {
            assert_eq!(draw_index(&[0.0, 1.0, 0.0], &mut rng), 1);
        }
    }
}
