use rand::seq::index;
use rayon::prelude::*;

use super::MetricValue;
use crate::data::{Dataset, Matrix};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

pub const MMD_MAX_ROWS: usize = 2000;

fn subsample(m: &Matrix, max_rows: usize, seed: u64) -> Matrix {
    if m.rows() <= max_rows {
        return m.clone();
    }
    let mut idx = index::sample(&mut rng_from_seed(seed), m.rows(), max_rows).into_vec();
    idx.sort_unstable();
    m.select_rows(&idx)
}

/// Unbiased squared MMD with an RBF kernel.
///
/// Each side is subsampled to `max_rows` rows (both with the same seeded
/// index draw), the pooled sample is standardized per column, and the
/// bandwidth is the median pairwise Euclidean distance of the pooled sample.
/// Equal-size samples use the paired U-statistic, which is exactly zero for
/// identical samples; otherwise the cross term averages over all pairs. The
/// estimate can be slightly negative.
pub fn mmd_rbf(real: &Dataset, synth: &Dataset, max_rows: usize, seed: u64) -> Result<MetricValue> {
    real.require_same_schema(synth)?;
    if real.n() < 2 || synth.n() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: real.n().min(synth.n()),
        });
    }
    let sub_seed = derive_seed(seed, "mmd/subsample");
    let x = subsample(real.features(), max_rows.max(2), sub_seed);
    let y = subsample(synth.features(), max_rows.max(2), sub_seed);
    let pooled = x.vstack(&y)?;
    let (m, n) = (x.rows(), y.rows());
    let total = m + n;
    let d = pooled.cols();

    let mut z = pooled.clone();
    for j in 0..d {
        let col = pooled.column(j);
        let mean = col.iter().sum::<f64>() / total as f64;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / total as f64).sqrt();
        let sd = if sd > 0.0 { sd } else { 1.0 };
        for i in 0..total {
            z.set(i, j, (pooled.get(i, j) - mean) / sd);
        }
    }

    // upper-triangle squared distances, row by row
    let rows: Vec<Vec<f64>> = (0..total)
        .into_par_iter()
        .map(|i| {
            let a = z.row(i);
            (i + 1..total)
                .map(|j| a.iter().zip(z.row(j)).map(|(u, v)| (u - v) * (u - v)).sum())
                .collect()
        })
        .collect();
    let mut all: Vec<f64> = rows.iter().flatten().copied().collect();
    let mid = all.len() / 2;
    let median_sq = if all.len() % 2 == 1 {
        *all.select_nth_unstable_by(mid, f64::total_cmp).1
    } else {
        let hi = *all.select_nth_unstable_by(mid, f64::total_cmp).1;
        let lo = all[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // median of distances, not of squared distances
        ((lo.sqrt() + hi.sqrt()) / 2.0).powi(2)
    };
    drop(all);
    let bandwidth_sq = if median_sq > 0.0 { median_sq } else { 1.0 };
    let kernel = |d2: f64| (-d2 / (2.0 * bandwidth_sq)).exp();
    let paired = m == n;

    // (sum Kxx off-diagonal, sum Kyy off-diagonal, sum Kxy over counted pairs)
    let sums: Vec<(f64, f64, f64)> = rows
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            let (mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0);
            for (off, &d2) in row.iter().enumerate() {
                let j = i + 1 + off;
                let k = kernel(d2);
                match (i < m, j < m) {
                    (true, true) => xx += 2.0 * k,
                    (false, false) => yy += 2.0 * k,
                    _ => {
                        // i is in x, j - m indexes y
                        if !(paired && j - m == i) {
                            xy += k;
                        }
                    }
                }
            }
            (xx, yy, xy)
        })
        .collect();
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b, c) in sums {
        sxx += a;
        syy += b;
        sxy += c;
    }
    let (mf, nf) = (m as f64, n as f64);
    let value = if paired {
        (sxx + syy - 2.0 * sxy) / (mf * (mf - 1.0))
    } else {
        sxx / (mf * (mf - 1.0)) + syy / (nf * (nf - 1.0)) - 2.0 * sxy / (mf * nf)
    };
    Ok(MetricValue {
        name: "mmd".into(),
        value,
        detail: Some(vec![bandwidth_sq.sqrt()]),
    })
}
