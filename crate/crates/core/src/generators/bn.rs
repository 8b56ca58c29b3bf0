use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::binning::QuantileBins;
use super::draw_index;
use crate::data::{ColumnKind, Dataset};
use crate::rng::Rng;

/// One variable of the tree network. `cpt[s]` is the distribution of this
/// node given parent state `s` (a single row for the root).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnNode {
    pub parent: Option<usize>,
    pub states: usize,
    pub cpt: Vec<Vec<f64>>,
}

/// Chow-Liu tree over the feature columns plus the label, which is node `d`
/// and the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnModel {
    pub nodes: Vec<BnNode>,
    /// Ancestral sampling order, starting at the label node.
    pub order: Vec<usize>,
    /// Bins of each continuous column; `None` for categorical columns.
    pub bins: Vec<Option<QuantileBins>>,
}

/// Mutual information of two discrete columns from a contingency table
/// smoothed by `alpha` per cell.
fn mutual_information(a: &[usize], sa: usize, b: &[usize], sb: usize, alpha: f64) -> f64 {
    let mut table = vec![alpha; sa * sb];
    for (&x, &y) in a.iter().zip(b) {
        table[x * sb + y] += 1.0;
    }
    let total: f64 = table.iter().sum();
    let mut pa = vec![0.0; sa];
    let mut pb = vec![0.0; sb];
    for x in 0..sa {
        for y in 0..sb {
            let p = table[x * sb + y] / total;
            pa[x] += p;
            pb[y] += p;
        }
    }
    let mut mi = 0.0;
    for x in 0..sa {
        for y in 0..sb {
            let p = table[x * sb + y] / total;
            mi += p * (p / (pa[x] * pb[y])).ln();
        }
    }
    mi.max(0.0)
}

impl BnModel {
    pub fn fit(data: &Dataset, q: usize, alpha: f64) -> Self {
        let d = data.d();
        let n = data.n();
        let x = data.features();
        let mut bins = Vec::with_capacity(d);
        let mut states = Vec::with_capacity(d + 1);
        let mut codes: Vec<Vec<usize>> = Vec::with_capacity(d + 1);
        for c in data.schema() {
            let col = x.column(c.index);
            match c.kind {
                ColumnKind::Continuous => {
                    let b = QuantileBins::fit(&col, q);
                    codes.push(col.iter().map(|&v| b.bin(v)).collect());
                    states.push(b.n_bins());
                    bins.push(Some(b));
                }
                ColumnKind::Categorical { cardinality } => {
                    codes.push(col.iter().map(|&v| v as usize).collect());
                    states.push(cardinality);
                    bins.push(None);
                }
            }
        }
        codes.push(data.labels().iter().map(|&y| y as usize).collect());
        states.push(2);

        let m = d + 1;
        let mut mi = vec![0.0; m * m];
        for i in 0..m {
            for j in i + 1..m {
                let v = mutual_information(&codes[i], states[i], &codes[j], states[j], alpha);
                mi[i * m + j] = v;
                mi[j * m + i] = v;
            }
        }

        // Prim's algorithm for the maximum spanning tree, grown from the label.
        let root = d;
        let mut parent: Vec<Option<usize>> = vec![None; m];
        let mut in_tree = vec![false; m];
        let mut best = vec![f64::NEG_INFINITY; m];
        in_tree[root] = true;
        let mut order = vec![root];
        for v in 0..d {
            best[v] = mi[root * m + v];
            parent[v] = Some(root);
        }
        while order.len() < m {
            let mut pick = None;
            for v in 0..m {
                if !in_tree[v] && pick.is_none_or(|p: usize| best[v] > best[p]) {
                    pick = Some(v);
                }
            }
            let v = pick.expect("a node remains outside the tree");
            in_tree[v] = true;
            order.push(v);
            for u in 0..m {
                if !in_tree[u] && mi[v * m + u] > best[u] {
                    best[u] = mi[v * m + u];
                    parent[u] = Some(v);
                }
            }
        }

        let mut nodes = Vec::with_capacity(m);
        for v in 0..m {
            let s = states[v];
            let node = match parent[v] {
                None => {
                    // The label root keeps the empirical prior.
                    let mut counts = vec![0.0; s];
                    for &c in &codes[v] {
                        counts[c] += 1.0;
                    }
                    BnNode {
                        parent: None,
                        states: s,
                        cpt: vec![counts.iter().map(|c| c / n as f64).collect()],
                    }
                }
                Some(p) => {
                    let sp = states[p];
                    let mut counts = vec![vec![alpha; s]; sp];
                    for (&pc, &c) in codes[p].iter().zip(&codes[v]) {
                        counts[pc][c] += 1.0;
                    }
                    for row in &mut counts {
                        let t: f64 = row.iter().sum();
                        row.iter_mut().for_each(|c| *c /= t);
                    }
                    BnNode {
                        parent: Some(p),
                        states: s,
                        cpt: counts,
                    }
                }
            };
            nodes.push(node);
        }
        Self { nodes, order, bins }
    }

    /// Tree edges as `(parent, child)`; the label is node `d`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.order
            .iter()
            .filter_map(|&v| self.nodes[v].parent.map(|p| (p, v)))
            .collect()
    }

    pub(crate) fn sample_row(&self, row: &mut [f64], rng: &mut Rng) -> u8 {
        let d = self.bins.len();
        let mut state = vec![0usize; d + 1];
        for &v in &self.order {
            let node = &self.nodes[v];
            let dist = match node.parent {
                None => &node.cpt[0],
                Some(p) => &node.cpt[state[p]],
            };
            state[v] = draw_index(dist, rng);
        }
        for (j, b) in self.bins.iter().enumerate() {
            row[j] = match b {
                Some(b) => {
                    let (lo, hi) = b.bounds(state[j]);
                    lo + rng.random::<f64>() * (hi - lo)
                }
                None => state[j] as f64,
            };
        }
        state[d] as u8
    }
}
