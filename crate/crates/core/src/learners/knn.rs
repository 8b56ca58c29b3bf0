use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::encode::Encoder;
use crate::data::{ColumnKind, Matrix};

pub const NEIGHBORS: usize = 5;

/// k-nearest-neighbour vote on standardized, one-hot expanded features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct KnnModel {
    enc: Encoder,
    train: Matrix,
    labels: Vec<u8>,
    k: usize,
}

impl KnnModel {
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let q = self.enc.transform(x);
        (0..q.rows())
            .into_par_iter()
            .map(|i| {
                let row = q.row(i);
                let mut dist: Vec<(f64, usize)> = (0..self.train.rows())
                    .map(|j| {
                        let d2 = row
                            .iter()
                            .zip(self.train.row(j))
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>();
                        (d2, j)
                    })
                    .collect();
                let k = self.k.min(dist.len());
                let cmp =
                    |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                if k < dist.len() {
                    dist.select_nth_unstable_by(k - 1, cmp);
                }
                let votes = dist[..k]
                    .iter()
                    .filter(|(_, j)| self.labels[*j] == 1)
                    .count();
                votes as f64 / k as f64
            })
            .collect()
    }
}

pub(crate) fn fit(x: &Matrix, kinds: &[ColumnKind], y: &[u8]) -> KnnModel {
    let enc = Encoder::fit(x, kinds, true);
    KnnModel {
        train: enc.transform(x),
        enc,
        labels: y.to_vec(),
        k: NEIGHBORS,
    }
}
