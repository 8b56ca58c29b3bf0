use serde::{Deserialize, Serialize};

use super::sigmoid;
use super::tree::{grow, Criterion, Presorted, Targets, Tree, TreeParams};
use crate::data::Matrix;

pub const ROUNDS: usize = 100;
pub const MAX_DEPTH: usize = 3;
pub const LEARNING_RATE: f64 = 0.1;

/// Binary logistic-loss gradient boosting with Newton leaf values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct BoostingModel {
    pub(crate) init: f64,
    pub(crate) trees: Vec<Tree>,
    pub(crate) importance: Vec<f64>,
}

impl BoostingModel {
    pub fn decision_staged(&self, row: &[f64], rounds: usize) -> f64 {
        self.init
            + LEARNING_RATE
                * self.trees[..rounds.min(self.trees.len())]
                    .iter()
                    .map(|t| t.predict(row))
                    .sum::<f64>()
    }

    pub fn predict_staged(&self, x: &Matrix, rounds: usize) -> Vec<f64> {
        (0..x.rows())
            .map(|i| sigmoid(self.decision_staged(x.row(i), rounds)))
            .collect()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        self.predict_staged(x, self.trees.len())
    }
}

/// Fits `ROUNDS` trees, recording class-1 training probabilities after each
/// round count in `checkpoints` (0 is the prior-only model).
pub(crate) fn fit(x: &Matrix, y: &[u8], checkpoints: &[usize]) -> (BoostingModel, Vec<Vec<f64>>) {
    let n = x.rows();
    let pos = y.iter().filter(|&&v| v == 1).count() as f64 / n as f64;
    let pos = pos.clamp(1e-6, 1.0 - 1e-6);
    let init = (pos / (1.0 - pos)).ln();
    let pre = Presorted::new(x);
    let params = TreeParams {
        max_depth: MAX_DEPTH,
        min_leaf: 1.0,
        max_features: None,
        criterion: Criterion::Newton,
    };
    let weight = vec![1.0; n];
    let mut f = vec![init; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut importance = vec![0.0; x.cols()];
    let mut trees = Vec::with_capacity(ROUNDS);
    let mut snapshots = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    for round in 0..=ROUNDS {
        let probs: Vec<f64> = f.iter().map(|&v| sigmoid(v)).collect();
        while next < checkpoints.len() && checkpoints[next] == round {
            snapshots.push(probs.clone());
            next += 1;
        }
        if round == ROUNDS {
            break;
        }
        for i in 0..n {
            grad[i] = f64::from(y[i]) - probs[i];
            hess[i] = probs[i] * (1.0 - probs[i]);
        }
        let tree = grow(
            x,
            &pre,
            &Targets {
                weight: &weight,
                target: &grad,
                hess: Some(&hess),
            },
            &params,
            None,
            &mut importance,
        );
        for (i, fi) in f.iter_mut().enumerate() {
            *fi += LEARNING_RATE * tree.predict(x.row(i));
        }
        trees.push(tree);
    }
    (
        BoostingModel {
            init,
            trees,
            importance,
        },
        snapshots,
    )
}
