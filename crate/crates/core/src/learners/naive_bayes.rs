use serde::{Deserialize, Serialize};

use super::encode::Encoder;
use super::sigmoid;
use crate::data::{ColumnKind, Matrix};

pub const VAR_FLOOR: f64 = 1e-9;

/// Per-class diagonal Gaussians over one-hot expanded features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct NaiveBayesModel {
    enc: Encoder,
    log_prior: [f64; 2],
    mean: [Vec<f64>; 2],
    var: [Vec<f64>; 2],
}

impl NaiveBayesModel {
    fn log_likelihood(&self, c: usize, row: &[f64]) -> f64 {
        row.iter()
            .zip(&self.mean[c])
            .zip(&self.var[c])
            .map(|((x, m), v)| {
                -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (x - m).powi(2) / (2.0 * v)
            })
            .sum()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let z = self.enc.transform(x);
        (0..z.rows())
            .map(|i| {
                let row = z.row(i);
                let l1 = self.log_prior[1] + self.log_likelihood(1, row);
                let l0 = self.log_prior[0] + self.log_likelihood(0, row);
                sigmoid(l1 - l0)
            })
            .collect()
    }
}

pub(crate) fn fit(x: &Matrix, kinds: &[ColumnKind], y: &[u8]) -> NaiveBayesModel {
    let enc = Encoder::fit(x, kinds, false);
    let z = enc.transform(x);
    let width = z.cols();
    let mut count = [0.0f64; 2];
    let mut mean = [vec![0.0; width], vec![0.0; width]];
    let mut var = [vec![0.0; width], vec![0.0; width]];
    for (i, &label) in y.iter().enumerate().take(z.rows()) {
        let c = label as usize;
        count[c] += 1.0;
        for (m, v) in mean[c].iter_mut().zip(z.row(i)) {
            *m += v;
        }
    }
    for c in 0..2 {
        mean[c].iter_mut().for_each(|m| *m /= count[c]);
    }
    for (i, &label) in y.iter().enumerate().take(z.rows()) {
        let c = label as usize;
        for ((s, m), v) in var[c].iter_mut().zip(&mean[c]).zip(z.row(i)) {
            *s += (v - m).powi(2);
        }
    }
    for c in 0..2 {
        var[c]
            .iter_mut()
            .for_each(|s| *s = (*s / count[c]).max(VAR_FLOOR));
    }
    let n = count[0] + count[1];
    NaiveBayesModel {
        enc,
        log_prior: [(count[0] / n).ln(), (count[1] / n).ln()],
        mean,
        var,
    }
}
