use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Ground truth of an injected label flip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseInjection {
    pub proportion: f64,
    pub flipped_ids: BTreeSet<u64>,
}

impl NoiseInjection {
    pub fn none() -> Self {
        Self {
            proportion: 0.0,
            flipped_ids: BTreeSet::new(),
        }
    }

    pub fn n_flipped(&self) -> usize {
        self.flipped_ids.len()
    }
}

/// Flips `round(proportion * n)` labels chosen uniformly without replacement.
///
/// The rows are the head of one seeded permutation, so for a fixed seed the
/// flipped set at a lower proportion is contained in the set at a higher one.
pub fn inject_label_noise(
    data: &Dataset,
    proportion: f64,
    seed: u64,
) -> Result<(Dataset, NoiseInjection)> {
    if !(0.0..=1.0).contains(&proportion) {
        return Err(Error::InvalidInput(format!(
            "noise proportion {proportion} outside [0, 1]"
        )));
    }
    let n = data.n();
    let k = ((proportion * n as f64).round() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(derive_seed(seed, "label-noise")));
    let flipped_ids: BTreeSet<u64> = order[..k].iter().map(|&i| data.row_ids()[i]).collect();
    let injection = NoiseInjection {
        proportion,
        flipped_ids,
    };
    Ok((apply_flips(data, &injection)?, injection))
}

/// Flips the labels of every row listed in `injection`.
pub fn apply_flips(data: &Dataset, injection: &NoiseInjection) -> Result<Dataset> {
    let mut hit = 0;
    let labels = data
        .labels()
        .iter()
        .zip(data.row_ids())
        .map(|(&y, id)| {
            if injection.flipped_ids.contains(id) {
                hit += 1;
                1 - y
            } else {
                y
            }
        })
        .collect();
    if hit != injection.flipped_ids.len() {
        return Err(Error::InvalidInput(
            "noise injection references row ids absent from the dataset".into(),
        ));
    }
    data.with_labels(labels)
}
