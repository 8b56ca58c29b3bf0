use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::draw_index;
use crate::data::{Dataset, Matrix};
use crate::rng::{derive_seed_indexed, rng_from_seed, Rng};

pub const MAX_EM_ITERATIONS: usize = 200;
pub const EM_TOLERANCE: f64 = 1e-6;
pub const VARIANCE_FLOOR: f64 = 1e-6;

/// Diagonal-covariance Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Mean per-row log-likelihood at the last iteration.
    pub log_likelihood: f64,
}

/// One mixture per class present in the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub classes: [Option<Mixture>; 2],
}

impl GmmModel {
    pub fn fit(data: &Dataset, k: usize, seed: u64) -> Self {
        let fit_class = |c: u8| {
            let idx: Vec<usize> = (0..data.n()).filter(|&i| data.labels()[i] == c).collect();
            (!idx.is_empty()).then(|| {
                let x = data.features().select_rows(&idx);
                Mixture::fit(&x, k, derive_seed_indexed(seed, "gmm/class", u64::from(c)))
            })
        };
        Self {
            classes: [fit_class(0), fit_class(1)],
        }
    }

    pub(crate) fn sample_row(&self, y: u8, row: &mut [f64], rng: &mut Rng) {
        let m = self.classes[y as usize]
            .as_ref()
            .or(self.classes[1 - y as usize].as_ref())
            .expect("at least one class was fitted");
        let c = draw_index(&m.weights, rng);
        for (j, v) in row.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            *v = m.means[c][j] + z * m.variances[c][j].sqrt();
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: first centre uniform, the rest proportional to the
/// squared distance to the nearest chosen centre.
fn kmeans_pp(x: &Matrix, k: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let n = x.rows();
    let mut centres = vec![x.row(rng.random_range(0..n)).to_vec()];
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), &centres[0])).collect();
    while centres.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            draw_index(&dist, rng)
        } else {
            rng.random_range(0..n)
        };
        let c = x.row(next).to_vec();
        for (i, di) in dist.iter_mut().enumerate() {
            *di = di.min(sq_dist(x.row(i), &c));
        }
        centres.push(c);
    }
    centres
}

impl Mixture {
    /// EM from k-means++ centres with the pooled variance; `k` is capped at
    /// the number of rows.
    pub fn fit(x: &Matrix, k: usize, seed: u64) -> Self {
        let n = x.rows();
        let d = x.cols();
        let k = k.min(n).max(1);
        let mut rng = rng_from_seed(seed);
        let mut means = kmeans_pp(x, k, &mut rng);
        let mut pooled = vec![0.0; d];
        for (j, p) in pooled.iter_mut().enumerate() {
            let col = x.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            *p = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64)
                .max(VARIANCE_FLOOR);
        }
        let mut variances = vec![pooled; k];
        let mut weights = vec![1.0 / k as f64; k];

        let mut resp = vec![0.0; n * k];
        let mut prev = f64::NEG_INFINITY;
        let mut ll = f64::NEG_INFINITY;
        let mut iterations = 0;
        for it in 1..=MAX_EM_ITERATIONS {
            iterations = it;
            ll = e_step(x, &weights, &means, &variances, &mut resp);
            // M step
            for c in 0..k {
                let nk: f64 = (0..n).map(|i| resp[i * k + c]).sum();
                weights[c] = nk / n as f64;
                if nk < 1e-10 {
                    continue;
                }
                for j in 0..d {
                    let mu = (0..n).map(|i| resp[i * k + c] * x.get(i, j)).sum::<f64>() / nk;
                    let var = (0..n)
                        .map(|i| resp[i * k + c] * (x.get(i, j) - mu).powi(2))
                        .sum::<f64>()
                        / nk;
                    means[c][j] = mu;
                    variances[c][j] = var.max(VARIANCE_FLOOR);
                }
            }
            if (ll - prev).abs() < EM_TOLERANCE {
                break;
            }
            prev = ll;
        }
        Self {
            weights,
            means,
            variances,
            iterations,
            log_likelihood: ll,
        }
    }
}

/// Fills responsibilities and returns the mean per-row log-likelihood.
fn e_step(
    x: &Matrix,
    weights: &[f64],
    means: &[Vec<f64>],
    variances: &[Vec<f64>],
    resp: &mut [f64],
) -> f64 {
    let k = weights.len();
    let n = x.rows();
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let norm: Vec<f64> = variances
        .iter()
        .map(|v| -0.5 * v.iter().map(|s| s.ln() + ln_2pi).sum::<f64>())
        .collect();
    let mut total = 0.0;
    for i in 0..n {
        let row = x.row(i);
        let r = &mut resp[i * k..(i + 1) * k];
        let mut max = f64::NEG_INFINITY;
        for c in 0..k {
            r[c] = if weights[c] > 0.0 {
                let q: f64 = row
                    .iter()
                    .zip(&means[c])
                    .zip(&variances[c])
                    .map(|((v, m), s)| (v - m) * (v - m) / s)
                    .sum();
                weights[c].ln() + norm[c] - 0.5 * q
            } else {
                f64::NEG_INFINITY
            };
            max = max.max(r[c]);
        }
        let sum: f64 = r.iter().map(|l| (l - max).exp()).sum();
        let lse = max + sum.ln();
        for v in r.iter_mut() {
            *v = (*v - lse).exp();
        }
        total += lse;
    }
    total / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn single_component_is_gaussian_mle() {
        let mut rng = rng_from_seed(4);
        let dist = Normal::new(2.0, 1.5).unwrap();
        let data: Vec<f64> = (0..5000).map(|_| dist.sample(&mut rng)).collect();
        let x = Matrix::new(5000, 1, data.clone()).unwrap();
        let m = Mixture::fit(&x, 1, 0);
        let mean = data.iter().sum::<f64>() / 5000.0;
        let var = data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5000.0;
        assert!((m.means[0][0] - mean).abs() < 1e-9);
        assert!((m.variances[0][0] - var).abs() < 1e-9);
        assert_eq!(m.weights, vec![1.0]);
    }

    #[test]
    fn separates_two_clusters() {
        let mut rng = rng_from_seed(5);
        let mut v = Vec::new();
        for i in 0..600 {
            let centre = if i % 2 == 0 { -5.0 } else { 5.0 };
            let z: f64 = rng.sample(StandardNormal);
            v.push(centre + z * 0.5);
        }
        let m = Mixture::fit(&Matrix::new(600, 1, v).unwrap(), 2, 1);
        let mut mu: Vec<f64> = m.means.iter().map(|r| r[0]).collect();
        mu.sort_by(f64::total_cmp);
        assert!(
            (mu[0] + 5.0).abs() < 0.2 && (mu[1] - 5.0).abs() < 0.2,
            "{mu:?}"
        );
        assert!(m.weights.iter().all(|w| (w - 0.5).abs() < 0.05));
    }

    #[test]
    fn duplicate_rows_do_not_break_em() {
        let x = Matrix::new(4, 2, vec![1.0; 8]).unwrap();
        let m = Mixture::fit(&x, 3, 0);
        assert_eq!(m.weights.len(), 3);
        assert!(m.log_likelihood.is_finite());
        for v in m.variances.iter().flatten() {
            assert!(*v >= VARIANCE_FLOOR);
        }
    }
}
