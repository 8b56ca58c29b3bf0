use serde::{Deserialize, Serialize};

use super::encode::Encoder;
use super::sigmoid;
use crate::data::{ColumnKind, Matrix};

pub const LEARNING_RATE: f64 = 0.1;
pub const ITERATIONS: usize = 200;
pub const L2: f64 = 1e-4;

/// L2-regularised logistic regression on standardized, one-hot expanded
/// features, trained by full-batch gradient descent from zero weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct LogisticModel {
    pub(crate) enc: Encoder,
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: f64,
}

impl LogisticModel {
    fn decision(&self, row: &[f64]) -> f64 {
        self.bias
            + row
                .iter()
                .zip(&self.weights)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let z = self.enc.transform(x);
        (0..z.rows())
            .map(|i| sigmoid(self.decision(z.row(i))))
            .collect()
    }

    /// `|w_j|` on standardized columns, summed back onto the original columns.
    pub fn importance(&self, d: usize) -> Vec<f64> {
        let mut imp = vec![0.0; d];
        for (c, w) in self.weights.iter().enumerate() {
            imp[self.enc.source[c]] += w.abs();
        }
        imp
    }
}

/// Fits the model, recording class-1 training probabilities after each
/// iteration count listed in `checkpoints` (iteration 0 is the zero model).
pub(crate) fn fit(
    x: &Matrix,
    kinds: &[ColumnKind],
    y: &[u8],
    checkpoints: &[usize],
) -> (LogisticModel, Vec<Vec<f64>>) {
    let enc = Encoder::fit(x, kinds, true);
    let z = enc.transform(x);
    let n = z.rows();
    let width = z.cols();
    let mut model = LogisticModel {
        enc,
        weights: vec![0.0; width],
        bias: 0.0,
    };
    let mut snapshots = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    let mut probs = vec![0.5; n];
    let mut grad = vec![0.0; width];
    for iter in 0..=ITERATIONS {
        for (i, p) in probs.iter_mut().enumerate() {
            *p = sigmoid(model.decision(z.row(i)));
        }
        while next < checkpoints.len() && checkpoints[next] == iter {
            snapshots.push(probs.clone());
            next += 1;
        }
        if iter == ITERATIONS {
            break;
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for i in 0..n {
            let e = probs[i] - f64::from(y[i]);
            grad_b += e;
            for (g, v) in grad.iter_mut().zip(z.row(i)) {
                *g += e * v;
            }
        }
        let inv_n = 1.0 / n as f64;
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            *w -= LEARNING_RATE * (g * inv_n + L2 * *w);
        }
        model.bias -= LEARNING_RATE * grad_b * inv_n;
    }
    (model, snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_give_one_half() {
        let x = Matrix::from_rows(&[vec![1.0, -2.0], vec![3.0, 0.5], vec![-4.0, 9.0]]).unwrap();
        let kinds = [ColumnKind::Continuous; 2];
        let model = LogisticModel {
            enc: Encoder::fit(&x, &kinds, true),
            weights: vec![0.0; 2],
            bias: 0.0,
        };
        assert!(model.predict(&x).iter().all(|&p| p == 0.5));
    }

    #[test]
    fn learns_direction() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 - 19.5]).collect();
        let y: Vec<u8> = (0..40).map(|i| u8::from(i >= 20)).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let (m, snaps) = fit(&x, &[ColumnKind::Continuous], &y, &[0, 200]);
        assert!(m.weights[0] > 0.0);
        assert!(snaps[0].iter().all(|&p| p == 0.5));
        assert_eq!(snaps[1], m.predict(&x));
    }
}
