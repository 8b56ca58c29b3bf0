//! End-to-end evaluation of one experimental condition: split, optional label
//! noise, profiling, segmented generation, postprocessing and evaluation of
//! utility and fidelity.
//!
//! Every random choice in a run is derived from [`RunConfig::seed`], so a
//! [`RunResult`] is a pure function of its config. Runs that differ only in
//! strategy or generator share the split, the noise and the train profile,
//! which makes strategy comparisons paired.

mod config;
mod run;
mod stages;

pub use config::{DatasetSource, Postprocessing, Preprocessing, RunConfig};
pub use run::{
    evaluate_real_reference, run_condition, ModelAuroc, NoiseRecord, RealPostprocessResult,
    RunResult, RunStatus, SegmentRecord, StageError, POSTPROCESS_SCORER,
};
pub use stages::{
    evaluate_fidelity, evaluate_utility, postprocess, preprocess, FidelityResult, ModelUtility,
    TestSet, UtilityResult,
};
