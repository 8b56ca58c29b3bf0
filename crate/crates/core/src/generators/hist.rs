use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::binning::QuantileBins;
use super::draw_index;
use crate::data::{ColumnKind, Dataset};
use crate::metrics::quantile_sorted;
use crate::rng::Rng;

/// Knots of the quantile sketch kept inside every histogram bin.
pub const SKETCH_KNOTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Marginal {
    /// Bin probabilities and, per bin, `SKETCH_KNOTS + 1` increasing knots;
    /// values are drawn by interpolating between adjacent knots.
    Continuous {
        probs: Vec<f64>,
        knots: Vec<Vec<f64>>,
    },
    Categorical {
        probs: Vec<f64>,
    },
}

impl Marginal {
    fn fit_continuous(values: &[f64], q: usize, alpha: f64) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let bins = QuantileBins::fit_sorted(&sorted, q);
        let mut members: Vec<Vec<f64>> = vec![Vec::new(); bins.n_bins()];
        for &v in &sorted {
            members[bins.bin(v)].push(v);
        }
        let total = sorted.len() as f64 + alpha * bins.n_bins() as f64;
        let probs = members
            .iter()
            .map(|m| (m.len() as f64 + alpha) / total)
            .collect();
        let knots = members
            .iter()
            .enumerate()
            .map(|(b, m)| {
                let (lo, hi) = bins.bounds(b);
                (0..=SKETCH_KNOTS)
                    .map(|k| {
                        let t = k as f64 / SKETCH_KNOTS as f64;
                        if m.is_empty() {
                            lo + t * (hi - lo)
                        } else {
                            quantile_sorted(m, t)
                        }
                    })
                    .collect()
            })
            .collect();
        Marginal::Continuous { probs, knots }
    }

    fn fit_categorical(values: &[f64], cardinality: usize, alpha: f64) -> Self {
        let mut counts = vec![alpha; cardinality];
        for &v in values {
            counts[v as usize] += 1.0;
        }
        let total: f64 = counts.iter().sum();
        Marginal::Categorical {
            probs: counts.iter().map(|c| c / total).collect(),
        }
    }

    fn sample(&self, rng: &mut Rng) -> f64 {
        match self {
            Marginal::Categorical { probs } => draw_index(probs, rng) as f64,
            Marginal::Continuous { probs, knots } => {
                let k = &knots[draw_index(probs, rng)];
                let u = rng.random::<f64>() * SKETCH_KNOTS as f64;
                let seg = (u.floor() as usize).min(SKETCH_KNOTS - 1);
                let t = u - seg as f64;
                k[seg] + t * (k[seg + 1] - k[seg])
            }
        }
    }
}

/// Independent per-class marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistModel {
    pub classes: [Option<Vec<Marginal>>; 2],
}

impl HistModel {
    pub fn fit(data: &Dataset, q: usize, alpha: f64) -> Self {
        let fit_class = |c: u8| {
            let idx: Vec<usize> = (0..data.n()).filter(|&i| data.labels()[i] == c).collect();
            (!idx.is_empty()).then(|| {
                let x = data.features().select_rows(&idx);
                data.schema()
                    .iter()
                    .map(|col| {
                        let v = x.column(col.index);
                        match col.kind {
                            ColumnKind::Continuous => Marginal::fit_continuous(&v, q, alpha),
                            ColumnKind::Categorical { cardinality } => {
                                Marginal::fit_categorical(&v, cardinality, alpha)
                            }
                        }
                    })
                    .collect()
            })
        };
        Self {
            classes: [fit_class(0), fit_class(1)],
        }
    }

    pub(crate) fn sample_row(&self, y: u8, row: &mut [f64], rng: &mut Rng) {
        let marginals = self.classes[y as usize]
            .as_ref()
            .or(self.classes[1 - y as usize].as_ref())
            .expect("at least one class was fitted");
        for (v, m) in row.iter_mut().zip(marginals) {
            *v = m.sample(rng);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn constant_column_samples_the_constant() {
        let m = Marginal::fit_continuous(&[2.5; 50], 8, 1.0);
        let mut rng = rng_from_seed(0);
        for _ in 0..100 {
            assert_eq!(m.sample(&mut rng), 2.5);
        }
    }

    #[test]
    fn samples_stay_within_observed_range() {
        let v: Vec<f64> = (0..200).map(|i| (i as f64).sqrt()).collect();
        let m = Marginal::fit_continuous(&v, 8, 1.0);
        let mut rng = rng_from_seed(1);
        for _ in 0..1000 {
            let s = m.sample(&mut rng);
            assert!((0.0..=199f64.sqrt()).contains(&s));
        }
    }

    #[test]
    fn categorical_smoothing() {
        let m = Marginal::fit_categorical(&[0.0, 0.0, 1.0], 3, 1.0);
        match m {
            Marginal::Categorical { probs } => assert_eq!(probs, vec![0.5, 2.0 / 6.0, 1.0 / 6.0]),
            _ => unreachable!(),
        }
    }
}
