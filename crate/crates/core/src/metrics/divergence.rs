use serde::{Deserialize, Serialize};

use super::{quantile_sorted, MetricValue};
use crate::data::{ColumnKind, Dataset};
use crate::error::{Error, Result};

pub const INVERSE_KL_BINS: usize = 10;
pub const KL_EPSILON: f64 = 1e-10;

/// `KL(p || q)` in nats after adding [`KL_EPSILON`] to every cell of both
/// histograms and renormalizing.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    let smooth = |h: &[f64]| {
        let t: f64 = h.iter().map(|v| v + KL_EPSILON).sum();
        h.iter().map(|v| (v + KL_EPSILON) / t).collect::<Vec<_>>()
    };
    let p = smooth(p);
    let q = smooth(q);
    p.iter()
        .zip(&q)
        .map(|(a, b)| if *a > 0.0 { a * (a / b).ln() } else { 0.0 })
        .sum::<f64>()
        .max(0.0)
}

/// `1 / (1 + KL(p || q))`.
pub fn inverse_kl_from_histograms(p: &[f64], q: &[f64]) -> f64 {
    1.0 / (1.0 + kl_divergence(p, q))
}

fn histogram(values: impl Iterator<Item = usize>, bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    for b in values {
        h[b] += 1.0;
    }
    h
}

/// Mean over features of `1 / (1 + KL(real || synth))` on per-feature
/// histograms. Continuous features use `bins` quantile bins of the real
/// column (duplicate edges merged); categorical features use their
/// categories. `detail` holds the per-feature values.
pub fn inverse_kl(real: &Dataset, synth: &Dataset, bins: usize) -> Result<MetricValue> {
    real.require_same_schema(synth)?;
    if synth.is_empty() {
        return Err(Error::InvalidInput("synthetic dataset is empty".into()));
    }
    let any_continuous = (0..real.d()).any(|j| real.column(j).kind == ColumnKind::Continuous);
    if bins < 1 || (any_continuous && real.n() < bins) {
        return Err(Error::InvalidInput(format!(
            "need at least {bins} real rows for {bins} bins, got {}",
            real.n()
        )));
    }
    let mut per_feature = Vec::with_capacity(real.d());
    for j in 0..real.d() {
        let r = real.features().column(j);
        let s = synth.features().column(j);
        let (p, q) = match real.column(j).kind {
            ColumnKind::Categorical { cardinality } => (
                histogram(r.iter().map(|v| *v as usize), cardinality),
                histogram(s.iter().map(|v| *v as usize), cardinality),
            ),
            ColumnKind::Continuous => {
                let mut sorted = r.clone();
                sorted.sort_by(f64::total_cmp);
                let mut inner: Vec<f64> = (1..bins)
                    .map(|k| quantile_sorted(&sorted, k as f64 / bins as f64))
                    .collect();
                inner.dedup();
                let k = inner.len() + 1;
                let bin_of = |v: &f64| inner.partition_point(|e| e <= v);
                (
                    histogram(r.iter().map(bin_of), k),
                    histogram(s.iter().map(bin_of), k),
                )
            }
        };
        per_feature.push(inverse_kl_from_histograms(&p, &q));
    }
    let value = if per_feature.is_empty() {
        1.0
    } else {
        per_feature.iter().sum::<f64>() / per_feature.len() as f64
    };
    Ok(MetricValue {
        name: "inverse_kl".into(),
        value,
        detail: Some(per_feature),
    })
}

/// 1-D Wasserstein-1 distance between two empirical distributions, the
/// integral of `|F_a - F_b|` over the merged support.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = a[0].min(b[0]);
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.min(*y),
            (Some(x), None) => *x,
            (None, Some(y)) => *y,
            (None, None) => unreachable!(),
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (next - prev);
        while i < a.len() && a[i] == next {
            i += 1;
        }
        while j < b.len() && b[j] == next {
            j += 1;
        }
        prev = next;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WassersteinOptions {
    /// Scale continuous columns by the real column's mean and standard
    /// deviation before measuring.
    pub standardize: bool,
}

impl Default for WassersteinOptions {
    fn default() -> Self {
        Self { standardize: true }
    }
}

pub fn wasserstein_mean(real: &Dataset, synth: &Dataset) -> Result<MetricValue> {
    wasserstein_mean_with(real, synth, WassersteinOptions::default())
}

/// Mean over features of W1 (continuous) or total variation distance
/// (categorical).
pub fn wasserstein_mean_with(
    real: &Dataset,
    synth: &Dataset,
    opts: WassersteinOptions,
) -> Result<MetricValue> {
    real.require_same_schema(synth)?;
    if real.is_empty() || synth.is_empty() {
        return Err(Error::InvalidInput(
            "wasserstein needs nonempty datasets".into(),
        ));
    }
    let mut per_feature = Vec::with_capacity(real.d());
    for j in 0..real.d() {
        let r = real.features().column(j);
        let s = synth.features().column(j);
        let v = match real.column(j).kind {
            ColumnKind::Categorical { cardinality } => {
                let p = histogram(r.iter().map(|v| *v as usize), cardinality);
                let q = histogram(s.iter().map(|v| *v as usize), cardinality);
                let (np, nq) = (r.len() as f64, s.len() as f64);
                0.5 * p
                    .iter()
                    .zip(&q)
                    .map(|(a, b)| (a / np - b / nq).abs())
                    .sum::<f64>()
            }
            ColumnKind::Continuous if opts.standardize => {
                let n = r.len() as f64;
                let m = r.iter().sum::<f64>() / n;
                let sd = (r.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
                let sd = if sd > 0.0 { sd } else { 1.0 };
                let z = |c: &[f64]| c.iter().map(|v| (v - m) / sd).collect::<Vec<_>>();
                wasserstein_1d(&z(&r), &z(&s))
            }
            ColumnKind::Continuous => wasserstein_1d(&r, &s),
        };
        per_feature.push(v);
    }
    let value = if per_feature.is_empty() {
        0.0
    } else {
        per_feature.iter().sum::<f64>() / per_feature.len() as f64
    };
    Ok(MetricValue {
        name: "wasserstein".into(),
        value,
        detail: Some(per_feature),
    })
}
