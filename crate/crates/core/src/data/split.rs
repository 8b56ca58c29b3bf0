use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub train_fraction: f64,
}

/// Stratified train/test split.
///
/// Each class is shuffled independently and contributes
/// `round(fraction * n_class)` rows to the train side (at least one row to
/// each side); per-class counts are then nudged so the train total equals
/// `round(fraction * n)`.
pub fn split_stratified(data: &Dataset, train_fraction: f64, seed: u64) -> Result<SplitPair> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let counts = data.class_counts();
    for (class, &count) in counts.iter().enumerate() {
        if count < 2 {
            return Err(Error::ClassTooSmall {
                class: class as u8,
                count,
                needed: 2,
            });
        }
    }

    let mut per_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &y) in data.labels().iter().enumerate() {
        per_class[y as usize].push(i);
    }

    let mut take = [0usize; 2];
    for c in 0..2 {
        let ideal = train_fraction * counts[c] as f64;
        take[c] = (ideal.round() as usize).clamp(1, counts[c] - 1);
    }
    let target = ((train_fraction * data.n() as f64).round() as usize).clamp(2, data.n() - 2);
    // Move one row at a time on the class whose rounding error is largest in
    // the needed direction.
    while take[0] + take[1] != target {
        let grow = take[0] + take[1] < target;
        let err = |c: usize| take[c] as f64 - train_fraction * counts[c] as f64;
        let candidates = (0..2).filter(|&c| {
            if grow {
                take[c] < counts[c] - 1
            } else {
                take[c] > 1
            }
        });
        let pick = if grow {
            candidates.min_by(|&a, &b| err(a).total_cmp(&err(b)))
        } else {
            candidates.max_by(|&a, &b| err(a).total_cmp(&err(b)))
        };
        match pick {
            Some(c) if grow => take[c] += 1,
            Some(c) => take[c] -= 1,
            None => break,
        }
    }

    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for c in 0..2 {
        let mut rng = rng_from_seed(derive_seed(
            seed,
            if c == 0 { "split/0" } else { "split/1" },
        ));
        let mut idx = per_class[c].clone();
        idx.shuffle(&mut rng);
        train_idx.extend_from_slice(&idx[..take[c]]);
        test_idx.extend_from_slice(&idx[take[c]..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok(SplitPair {
        train: data.subset(&train_idx),
        test: data.subset(&test_idx),
        train_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnSchema, Matrix};
    use std::collections::HashSet;

    fn toy(n0: usize, n1: usize) -> Dataset {
        let n = n0 + n1;
        let m = Matrix::new(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        let mut labels = vec![0u8; n0];
        labels.extend(vec![1u8; n1]);
        Dataset::with_sequential_ids(vec![ColumnSchema::continuous("x", 0)], m, labels).unwrap()
    }

    #[test]
    fn ten_rows_eighty_percent() {
        let sp = split_stratified(&toy(5, 5), 0.8, 3).unwrap();
        assert_eq!(sp.train.class_counts(), [4, 4]);
        assert_eq!(sp.test.class_counts(), [1, 1]);
    }

    #[test]
    fn deterministic_in_seed() {
        let a = split_stratified(&toy(30, 20), 0.7, 11).unwrap();
        let b = split_stratified(&toy(30, 20), 0.7, 11).unwrap();
        assert_eq!(a.train.row_ids(), b.train.row_ids());
        let c = split_stratified(&toy(30, 20), 0.7, 12).unwrap();
        assert_ne!(a.train.row_ids(), c.train.row_ids());
    }

    #[test]
    fn balanced_hundred_keeps_exact_ratio() {
        // Per-class counts: round(0.8 * 50) = 40 each, total 80 = round(0.8 * 100).
        let sp = split_stratified(&toy(50, 50), 0.8, 0).unwrap();
        let [c0, c1] = sp.train.class_counts();
        assert_eq!((c0, c1), (40, 40));
        assert_eq!(c1 as f64 / sp.train.n() as f64, 0.5);
    }

    #[test]
    fn partition_and_errors() {
        let ds = toy(7, 6);
        let sp = split_stratified(&ds, 0.5, 1).unwrap();
        let a: HashSet<_> = sp.train.row_ids().iter().collect();
        let b: HashSet<_> = sp.test.row_ids().iter().collect();
        assert!(a.is_disjoint(&b));
        assert_eq!(a.len() + b.len(), 13);
        assert_eq!(sp.train.n(), 7); // round(6.5) half away from zero
        assert!(split_stratified(&toy(1, 5), 0.5, 0).is_err());
        assert!(split_stratified(&ds, 1.0, 0).is_err());
    }
}
