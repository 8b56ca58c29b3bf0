//! Generators and checks for the structural invariants, shared by the
//! property tests and the acceptance harness.

#![allow(dead_code)]

use std::collections::BTreeSet;

use dcsynth_core::data::{
    apply_flips, inject_label_noise, split_stratified, ColumnSchema, Dataset, Matrix,
    NoiseInjection,
};
use dcsynth_core::generators::{apportion, GeneratorKind, GeneratorSpec};
use dcsynth_core::learners::ClassifierKind;
use dcsynth_core::pipeline::{
    postprocess, run_condition, DatasetSource, Postprocessing, RunConfig,
};
use dcsynth_core::profiling::{Profile, ProfileMethod, ProfilerConfig, ThresholdMode};
use dcsynth_core::Preprocessing;
use proptest::prelude::*;
use proptest::test_runner::TestCaseResult;

/// Dataset with `n` rows of `d` continuous features and ids from `first_id`.
fn dataset(d: usize, labels: Vec<u8>, values: Vec<f64>, first_id: u64) -> Dataset {
    let n = labels.len();
    let schema = (0..d)
        .map(|j| ColumnSchema::continuous(format!("x{j}"), j))
        .collect();
    let ids = (first_id..first_id + n as u64).collect();
    Dataset::new(schema, Matrix::new(n, d, values).unwrap(), labels, ids).unwrap()
}

/// Random datasets with at least two rows of each class.
pub fn arb_dataset(max_n: usize) -> impl Strategy<Value = Dataset> {
    (1usize..4, 8usize..max_n, 0u64..1000).prop_flat_map(|(d, n, first_id)| {
        (
            proptest::collection::vec(0u8..2, n),
            proptest::collection::vec(-5.0f64..5.0, n * d),
        )
            .prop_map(move |(mut labels, values)| {
                labels[..4].copy_from_slice(&[0, 0, 1, 1]);
                dataset(d, labels, values, first_id)
            })
    })
}

/// Cheap profilers across every method and threshold mode.
pub fn arb_profiler() -> impl Strategy<Value = ProfilerConfig> {
    prop_oneof![
        (0.05f64..0.95).prop_map(|tau| {
            let mut c = ProfilerConfig::new(ProfileMethod::Cleanlab)
                .with_threshold(ThresholdMode::Value, tau);
            c.learner = ClassifierKind::GaussianNb;
            c.folds = 3;
            c
        }),
        Just(()).prop_map(|()| {
            let mut c = ProfilerConfig::new(ProfileMethod::Cleanlab)
                .with_threshold(ThresholdMode::Default, 0.2);
            c.learner = ClassifierKind::GaussianNb;
            c.folds = 3;
            c
        }),
        (
            prop_oneof![Just(ProfileMethod::DataIq), Just(ProfileMethod::DataMaps)],
            prop_oneof![
                (0.01f64..=0.25).prop_map(|t| (ThresholdMode::Value, t)),
                (20.0f64..=80.0).prop_map(|t| (ThresholdMode::Percentile, t)),
            ],
        )
            .prop_map(|(m, (mode, tau))| {
                let mut c = ProfilerConfig::new(m).with_threshold(mode, tau);
                c.learner = ClassifierKind::LogisticRegression;
                c.checkpoints = 4;
                c
            }),
    ]
}

pub fn arb_sizes() -> impl Strategy<Value = (Vec<usize>, usize)> {
    (proptest::collection::vec(0usize..500, 1..6), 0usize..5000)
}

pub fn check_apportion(sizes: &[usize], n: usize) -> TestCaseResult {
    let counts = apportion(sizes, n);
    let total: usize = sizes.iter().sum();
    prop_assert_eq!(counts.len(), sizes.len());
    if total == 0 {
        prop_assert!(counts.iter().all(|&c| c == 0));
        return Ok(());
    }
    prop_assert_eq!(counts.iter().sum::<usize>(), n);
    for (&c, &s) in counts.iter().zip(sizes) {
        let quota = s as f64 * n as f64 / total as f64;
        prop_assert!(
            (c as f64 - quota).abs() < 1.0,
            "count {} quota {}",
            c,
            quota
        );
        if s == 0 {
            prop_assert_eq!(c, 0);
        }
    }
    Ok(())
}

pub fn check_split(data: &Dataset, fraction: f64, seed: u64) -> TestCaseResult {
    let split = split_stratified(data, fraction, seed).unwrap();
    let train: BTreeSet<u64> = split.train.row_ids().iter().copied().collect();
    let test: BTreeSet<u64> = split.test.row_ids().iter().copied().collect();
    prop_assert!(train.is_disjoint(&test));
    let all: BTreeSet<u64> = data.row_ids().iter().copied().collect();
    prop_assert_eq!(&train | &test, all);
    let counts = data.class_counts();
    let train_counts = split.train.class_counts();
    let test_counts = split.test.class_counts();
    for c in 0..2 {
        prop_assert!(train_counts[c] >= 1 && test_counts[c] >= 1);
        let ideal = fraction * counts[c] as f64;
        // keeping one row per side can dominate for tiny classes
        let clamped = ideal.round().clamp(1.0, counts[c] as f64 - 1.0);
        prop_assert!(
            (train_counts[c] as f64 - clamped).abs() <= 1.0,
            "class {} train {} ideal {}",
            c,
            train_counts[c],
            ideal
        );
    }
    for (i, id) in split.train.row_ids().iter().enumerate() {
        let j = data.row_ids().iter().position(|x| x == id).unwrap();
        prop_assert_eq!(split.train.labels()[i], data.labels()[j]);
        prop_assert_eq!(split.train.features().row(i), data.features().row(j));
    }
    Ok(())
}

pub fn check_flip_involution(data: &Dataset, proportion: f64, seed: u64) -> TestCaseResult {
    let (noisy, injection) = inject_label_noise(data, proportion, seed).unwrap();
    let expected = (proportion * data.n() as f64).round() as usize;
    prop_assert_eq!(injection.n_flipped(), expected);
    let differing = (0..data.n())
        .filter(|&i| noisy.labels()[i] != data.labels()[i])
        .count();
    prop_assert_eq!(differing, expected);
    prop_assert_eq!(&apply_flips(&noisy, &injection).unwrap(), data);
    prop_assert_eq!(&apply_flips(data, &NoiseInjection::none()).unwrap(), data);
    Ok(())
}

pub fn check_no_hard(data: &Dataset, profiler: &ProfilerConfig, seed: u64) -> TestCaseResult {
    let Ok((kept, assignment)) = postprocess(data, profiler, Postprocessing::NoHard, seed) else {
        // every row tagged Hard or a degenerate scorer: nothing survives
        return Ok(());
    };
    let assignment = assignment.expect("no_hard reports its filtering assignment");
    prop_assert_eq!(&assignment.row_ids, &data.row_ids().to_vec());
    let hard: BTreeSet<u64> = assignment.ids_with(Profile::Hard).into_iter().collect();
    prop_assert!(kept.row_ids().iter().all(|id| !hard.contains(id)));
    prop_assert_eq!(kept.n() + hard.len(), data.n());
    Ok(())
}

/// Small but complete run: tiny simulated data and a one-model roster.
pub fn tiny_run(
    seed: u64,
    kind: GeneratorKind,
    pre: Preprocessing,
    post: Postprocessing,
    noise: f64,
) -> RunConfig {
    let mut profiler = ProfilerConfig::new(ProfileMethod::Cleanlab);
    profiler.learner = ClassifierKind::GaussianNb;
    profiler.folds = 3;
    let mut c = RunConfig::new(
        DatasetSource::simulated(2, 40),
        profiler,
        GeneratorSpec::new(kind, 0),
        seed,
    )
    .with_strategy(pre, post);
    c.roster = vec![ClassifierKind::GaussianNb];
    c.importance_model = ClassifierKind::GaussianNb;
    c.noise = noise;
    c
}

pub fn arb_run() -> impl Strategy<Value = RunConfig> {
    (
        any::<u64>(),
        prop_oneof![
            Just(GeneratorKind::ChowLiuBn),
            Just(GeneratorKind::Gmm),
            Just(GeneratorKind::MarginalHist),
        ],
        prop_oneof![Just(Preprocessing::Baseline), Just(Preprocessing::EasyHard)],
        prop_oneof![Just(Postprocessing::Baseline), Just(Postprocessing::NoHard)],
        prop_oneof![Just(0.0), Just(0.1)],
    )
        .prop_map(|(seed, kind, pre, post, noise)| tiny_run(seed, kind, pre, post, noise))
}

pub fn check_run_determinism(config: &RunConfig) -> TestCaseResult {
    let a = run_condition(config);
    let b = run_condition(config);
    prop_assert!(a.is_ok(), "{:?}", a.error);
    prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    Ok(())
}
