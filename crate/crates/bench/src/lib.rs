//! Shared fixtures for the criterion benches.

use dcsynth_core::data::simulate_dataset;
use dcsynth_core::Dataset;

/// Simulated dataset with `d` features and `n` rows.
pub fn fixture(d: usize, n: usize, seed: u64) -> Dataset {
    simulate_dataset(d, n, seed).expect("valid simulation shape")
}

/// Deterministic scores and labels for ranking metrics.
pub fn scored_labels(n: usize) -> (Vec<f64>, Vec<u8>) {
    let scores = (0..n)
        .map(|i| ((i * 7919) % 1009) as f64 / 1009.0)
        .collect();
    let labels = (0..n).map(|i| u8::from((i * 31) % 7 < 3)).collect();
    (scores, labels)
}
