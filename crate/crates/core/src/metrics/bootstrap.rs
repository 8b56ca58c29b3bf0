use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::quantile_sorted;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub resamples: usize,
}

/// Percentile bootstrap of the mean: `resamples` draws of size `m` with
/// replacement; the summary mean is the mean of the resample means and the
/// interval spans their 2.5th and 97.5th percentiles.
pub fn bootstrap_ci(values: &[f64], resamples: usize, seed: u64) -> Result<BootstrapSummary> {
    if values.is_empty() {
        return Err(Error::InvalidInput("bootstrap of an empty sample".into()));
    }
    if resamples < 100 {
        return Err(Error::InvalidInput(format!(
            "need at least 100 resamples, got {resamples}"
        )));
    }
    let m = values.len();
    let mut rng = rng_from_seed(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..m).map(|_| values[rng.random_range(0..m)]).sum::<f64>() / m as f64)
        .collect();
    let mean = means.iter().sum::<f64>() / resamples as f64;
    means.sort_by(f64::total_cmp);
    let ci_low = quantile_sorted(&means, 0.025);
    let ci_high = quantile_sorted(&means, 0.975);
    Ok(BootstrapSummary {
        // last-ulp drift when every resample mean is identical
        mean: mean.clamp(ci_low, ci_high),
        ci_low,
        ci_high,
        resamples,
    })
}
