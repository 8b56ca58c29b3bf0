use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, Criterion, Presorted, Targets, Tree, TreeParams};
use crate::data::Matrix;
use crate::rng::{derive_seed_indexed, rng_from_seed};
use rand::Rng as _;

pub const TREE_MAX_DEPTH: usize = 8;
pub const TREE_MIN_LEAF: f64 = 5.0;
pub const FOREST_TREES: usize = 100;
pub const FOREST_MAX_DEPTH: usize = 12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct TreeModel {
    pub(crate) tree: Tree,
    pub(crate) importance: Vec<f64>,
}

impl TreeModel {
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|i| self.tree.predict(x.row(i))).collect()
    }
}

pub(crate) fn fit_tree(x: &Matrix, y: &[u8]) -> TreeModel {
    let target: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let weight = vec![1.0; x.rows()];
    let mut importance = vec![0.0; x.cols()];
    let tree = grow(
        x,
        &Presorted::new(x),
        &Targets {
            weight: &weight,
            target: &target,
            hess: None,
        },
        &TreeParams {
            max_depth: TREE_MAX_DEPTH,
            min_leaf: TREE_MIN_LEAF,
            max_features: None,
            criterion: Criterion::Gini,
        },
        None,
        &mut importance,
    );
    TreeModel { tree, importance }
}

/// Bagged Gini trees with `floor(sqrt(d))` candidate features per split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct ForestModel {
    pub(crate) trees: Vec<Tree>,
    pub(crate) importance: Vec<f64>,
}

impl ForestModel {
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let k = self.trees.len() as f64;
        (0..x.rows())
            .map(|i| {
                let row = x.row(i);
                self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / k
            })
            .collect()
    }
}

pub(crate) fn fit_forest(x: &Matrix, y: &[u8], seed: u64) -> ForestModel {
    let n = x.rows();
    let d = x.cols();
    let target: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let pre = Presorted::new(x);
    let params = TreeParams {
        max_depth: FOREST_MAX_DEPTH,
        min_leaf: 1.0,
        max_features: Some(((d as f64).sqrt().floor() as usize).max(1)),
        criterion: Criterion::Gini,
    };
    let fitted: Vec<(Tree, Vec<f64>)> = (0..FOREST_TREES)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_from_seed(derive_seed_indexed(seed, "forest/tree", b as u64));
            let mut weight = vec![0.0; n];
            for _ in 0..n {
                weight[rng.random_range(0..n)] += 1.0;
            }
            let mut imp = vec![0.0; d];
            let tree = grow(
                x,
                &pre,
                &Targets {
                    weight: &weight,
                    target: &target,
                    hess: None,
                },
                &params,
                Some(&mut rng),
                &mut imp,
            );
            (tree, imp)
        })
        .collect();
    let mut importance = vec![0.0; d];
    let mut trees = Vec::with_capacity(FOREST_TREES);
    for (t, imp) in fitted {
        for (a, b) in importance.iter_mut().zip(&imp) {
            *a += b;
        }
        trees.push(t);
    }
    ForestModel { trees, importance }
}
