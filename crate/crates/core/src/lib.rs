//! Data-centric synthetic tabular data toolkit.
//!
//! The crate covers the whole loop for binary-labelled tabular data:
//!
//! 1. [`data`]: datasets, CSV ingest, stratified splits, label-noise injection
//!    and a correlated-feature simulator.
//! 2. [`learners`]: a small roster of from-scratch classifiers with probability
//!    outputs, staged training traces and out-of-fold prediction.
//! 3. [`profiling`]: per-sample scores (confident learning, training-dynamics
//!    confidence / aleatoric / variability) and Easy / Ambiguous / Hard tags.
//! 4. [`generators`]: Chow-Liu Bayesian network, per-class Gaussian mixture and
//!    marginal histogram generators, plus profile-segmented generation.
//! 5. [`metrics`]: AUROC, Spearman, inverse KL, Wasserstein, MMD, bootstrap CIs.
//! 6. [`pipeline`]: one experimental condition end to end
//!    (split, profile, preprocess, generate, postprocess, evaluate).
//! 7. [`noisebench`] and [`report`]: benchmark drivers and table aggregation.
//!
//! All randomness flows from explicit `u64` seeds through [`rng`].

pub mod data;
pub mod error;
pub mod generators;
pub mod learners;
pub mod metrics;
pub mod noisebench;
pub mod pipeline;
pub mod profiling;
pub mod report;
pub mod rng;

pub use data::{ColumnKind, ColumnSchema, Dataset, Matrix, NoiseInjection, SplitPair};
pub use error::{Error, Result};
pub use generators::{
    fit_generator, fit_segmented, FittedGenerator, GeneratorKind, GeneratorSpec, Segment,
    SegmentedGenerator,
};
pub use learners::{ClassifierKind, ClassifierSpec, TrainedClassifier};
pub use metrics::{BootstrapSummary, MetricValue};
pub use pipeline::{
    run_condition, DatasetSource, Postprocessing, Preprocessing, RunConfig, RunResult,
};
pub use profiling::{
    NoiseMatrix, Profile, ProfileAssignment, ProfileMethod, ProfilerConfig, SampleScore,
    ThresholdMode,
};
pub use report::{AggregateRow, DeltaRow, GroupKey};
