//! Scalar evaluation metrics.

mod bootstrap;
mod divergence;
mod mmd;
mod ranking;

pub use bootstrap::{bootstrap_ci, BootstrapSummary};
pub use divergence::{
    inverse_kl, inverse_kl_from_histograms, kl_divergence, wasserstein_1d, wasserstein_mean,
    wasserstein_mean_with, WassersteinOptions, INVERSE_KL_BINS, KL_EPSILON,
};
pub use mmd::{mmd_rbf, MMD_MAX_ROWS};
pub use ranking::{auroc, mid_ranks, spearman};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub name: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Vec<f64>>,
}

/// Linear-interpolation quantile of already sorted values, `q` in `[0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile (0-100) with linear interpolation.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p / 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 100.0), 4.0);
        assert_eq!(percentile(&v, 50.0), 2.5);
        assert!((percentile(&v, 20.0) - 1.6).abs() < 1e-12);
    }
}
