use serde::{Deserialize, Serialize};

use crate::metrics::quantile_sorted;

/// Quantile bins of one column. Bin `b` covers `(edges[b-1], edges[b]]`,
/// with the outer bins closed at the observed minimum and maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileBins {
    pub edges: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

impl QuantileBins {
    /// Up to `q` bins at the `k/q` quantiles; duplicate edges are merged.
    pub fn fit(values: &[f64], q: usize) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self::fit_sorted(&sorted, q)
    }

    pub fn fit_sorted(sorted: &[f64], q: usize) -> Self {
        let min = sorted[0];
        let max = sorted[sorted.len() - 1];
        let mut edges: Vec<f64> = Vec::with_capacity(q.saturating_sub(1));
        for k in 1..q {
            let e = quantile_sorted(sorted, k as f64 / q as f64);
            if e < max && edges.last().is_none_or(|&last| e > last) {
                edges.push(e);
            }
        }
        Self { edges, min, max }
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn bin(&self, v: f64) -> usize {
        self.edges.partition_point(|&e| e < v)
    }

    pub fn bounds(&self, b: usize) -> (f64, f64) {
        let lo = if b == 0 { self.min } else { self.edges[b - 1] };
        let hi = if b == self.edges.len() {
            self.max
        } else {
            self.edges[b]
        };
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_column_has_one_bin() {
        let b = QuantileBins::fit(&[3.0; 10], 8);
        assert_eq!(b.n_bins(), 1);
        assert_eq!(b.bounds(0), (3.0, 3.0));
        assert_eq!(b.bin(3.0), 0);
    }

    #[test]
    fn bins_cover_range() {
        let v: Vec<f64> = (0..100).map(f64::from).collect();
        let b = QuantileBins::fit(&v, 4);
        assert_eq!(b.n_bins(), 4);
        let mut counts = [0; 4];
        for &x in &v {
            let k = b.bin(x);
            let (lo, hi) = b.bounds(k);
            assert!(lo <= x && x <= hi);
            counts[k] += 1;
        }
        assert_eq!(counts, [25, 25, 25, 25]);
    }
}
