use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::config::{Postprocessing, RunConfig};
use super::stages::{
    evaluate_fidelity, evaluate_utility, postprocess, preprocess, FidelityResult, TestSet,
    UtilityResult,
};
use crate::data::{inject_label_noise, split_stratified, Dataset, SplitPair};
use crate::error::Result;
use crate::generators::{fit_segmented, Segment};
use crate::learners::{train, ClassifierKind, ClassifierSpec};
use crate::profiling::{detection_prf, profile_dataset, Prf, ProfileCounts, ProfilerConfig};
use crate::rng::{derive_seed, derive_seed_indexed};

/// How `no_hard` scores synthetic rows; recorded in every result.
pub const POSTPROCESS_SCORER: &str = "profiler refit on the data being filtered";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub proportion: f64,
    pub n_flipped: usize,
    /// How well the train profile's Hard set recovers the flipped rows.
    pub detection: Option<Prf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub tag: Segment,
    pub size: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAuroc {
    pub kind: ClassifierKind,
    pub auroc: Option<f64>,
}

/// Roster scores after training on the real rows that survive `no_hard`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealPostprocessResult {
    pub n_rows: usize,
    pub models: Vec<ModelAuroc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: RunConfig,
    pub dataset: String,
    pub status: RunStatus,
    pub error: Option<StageError>,
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    pub noise: Option<NoiseRecord>,
    pub train_profile: Option<ProfileCounts>,
    pub segments: Vec<SegmentRecord>,
    pub n_synth: Option<usize>,
    /// Tags of the synthetic rows under `no_hard` (before filtering).
    pub synth_profile: Option<ProfileCounts>,
    pub n_synth_post: Option<usize>,
    pub postprocess_scorer: Option<String>,
    pub utility: Option<UtilityResult>,
    pub fidelity: Option<FidelityResult>,
    pub real_postprocessed: Option<RealPostprocessResult>,
    /// Purpose of every read of the held-out rows, in order.
    pub test_access_log: Vec<String>,
    pub warnings: Vec<String>,
    /// Not serialized, so repeated runs produce identical documents.
    #[serde(skip)]
    pub wall_clock: Option<Duration>,
}

impl RunResult {
    fn new(config: &RunConfig) -> Self {
        Self {
            config: config.clone(),
            dataset: config.dataset_label(),
            status: RunStatus::Ok,
            error: None,
            n_train: None,
            n_test: None,
            noise: None,
            train_profile: None,
            segments: Vec::new(),
            n_synth: None,
            synth_profile: None,
            n_synth_post: None,
            postprocess_scorer: None,
            utility: None,
            fidelity: None,
            real_postprocessed: None,
            test_access_log: Vec::new(),
            warnings: Vec::new(),
            wall_clock: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn at(stage: &'static str) -> impl Fn(crate::error::Error) -> StageError {
    move |e| StageError {
        stage: stage.to_string(),
        message: e.to_string(),
    }
}

fn profiler_for(config: &RunConfig) -> ProfilerConfig {
    let mut p = config.profiler.clone();
    p.seed = derive_seed_indexed(config.seed, "profiler", config.profiler.seed);
    p
}

/// Loads, splits and (optionally) corrupts the training labels.
fn prepare(config: &RunConfig) -> Result<(SplitPair, Dataset, crate::data::NoiseInjection)> {
    let data = config.dataset.load(config.seed)?;
    let split = split_stratified(
        &data,
        config.train_fraction,
        derive_seed(config.seed, "split"),
    )?;
    let (train, injection) = inject_label_noise(
        &split.train,
        config.noise,
        derive_seed(config.seed, "noise"),
    )?;
    Ok((split, train, injection))
}

/// Runs one condition end to end. Failures are recorded with their stage;
/// results computed before the failure are kept.
pub fn run_condition(config: &RunConfig) -> RunResult {
    let start = Instant::now();
    let mut result = RunResult::new(config);
    if let Err(e) = execute(config, &mut result) {
        log::warn!(
            "{}: {} failed: {}",
            config.result_file_name(),
            e.stage,
            e.message
        );
        result.status = RunStatus::Failed;
        result.error = Some(e);
    }
    result.wall_clock = Some(start.elapsed());
    result
}

fn execute(config: &RunConfig, result: &mut RunResult) -> std::result::Result<(), StageError> {
    config.validate().map_err(at("config"))?;
    let (split, train, injection) = prepare(config).map_err(at("data"))?;
    let test = TestSet::new(split.test);
    result.n_train = Some(train.n());
    result.n_test = Some(test.n());

    let profiler = profiler_for(config);
    let profiled = profile_dataset(&train, &profiler).map_err(at("profile"))?;
    if profiled.assignment.threshold.fallback {
        result.warnings.push(
            "train profile: constant scores, percentile threshold fell back to value mode".into(),
        );
    }
    result.train_profile = Some(profiled.assignment.counts());
    result.noise = (config.noise > 0.0).then(|| NoiseRecord {
        proportion: config.noise,
        n_flipped: injection.n_flipped(),
        detection: detection_prf(&profiled.assignment, &injection).ok(),
    });

    let segments =
        preprocess(&train, &profiled.assignment, config.preprocessing).map_err(at("preprocess"))?;
    for (tag, d) in &segments {
        if d.n() < 2 {
            result.warnings.push(format!(
                "segment {tag} has {} rows and is not modelled",
                d.n()
            ));
        }
    }
    let mut gen_spec = config.generator.clone();
    gen_spec.seed = derive_seed_indexed(config.seed, "generator", config.generator.seed);
    let generator = fit_segmented(&gen_spec, segments).map_err(at("generate"))?;
    result.segments = generator
        .segments()
        .iter()
        .map(|s| SegmentRecord {
            tag: s.tag,
            size: s.size,
            fraction: s.fraction,
        })
        .collect();

    let n_synth = (config.synth_size_ratio * train.n() as f64).round() as usize;
    let synth = generator.sample(n_synth, derive_seed(config.seed, "sample"));
    result.n_synth = Some(synth.n());

    let post_seed = derive_seed(config.seed, "postprocess");
    let (synth_post, post_assignment) =
        postprocess(&synth, &profiler, config.postprocessing, post_seed)
            .map_err(at("postprocess"))?;
    if let Some(a) = &post_assignment {
        result.synth_profile = Some(a.counts());
        result.postprocess_scorer = Some(POSTPROCESS_SCORER.into());
    }
    result.n_synth_post = Some(synth_post.n());

    let roster_seed = derive_seed(config.seed, "roster");
    let utility = evaluate_utility(
        &train,
        &synth_post,
        &test,
        &config.roster,
        config.importance_model,
        roster_seed,
    );
    result.warnings.extend(utility.missing.iter().cloned());
    result.utility = Some(utility);

    let fidelity = evaluate_fidelity(&train, &synth_post, derive_seed(config.seed, "fidelity"));
    result.warnings.extend(fidelity.missing.iter().cloned());
    result.fidelity = Some(fidelity);

    if config.include_real_postprocess_condition {
        let real_post = postprocess(
            &train,
            &profiler,
            Postprocessing::NoHard,
            derive_seed(config.seed, "real-postprocess"),
        )
        .map_err(at("real-postprocess"))?
        .0;
        let models = config
            .roster
            .iter()
            .enumerate()
            .map(|(i, &kind)| {
                let spec =
                    ClassifierSpec::new(kind, derive_seed_indexed(roster_seed, "roster", i as u64));
                let auroc = train_and_score(
                    &spec,
                    &real_post,
                    &test,
                    &format!("real-postprocessed/{kind}"),
                );
                if let Err(e) = &auroc {
                    result
                        .warnings
                        .push(format!("real-postprocessed {kind} auroc: {e}"));
                }
                ModelAuroc {
                    kind,
                    auroc: auroc.ok(),
                }
            })
            .collect();
        result.real_postprocessed = Some(RealPostprocessResult {
            n_rows: real_post.n(),
            models,
        });
    }
    result.test_access_log = test.access_log();
    Ok(())
}

fn train_and_score(
    spec: &ClassifierSpec,
    data: &Dataset,
    test: &TestSet,
    purpose: &str,
) -> Result<f64> {
    let model = train(spec, data)?;
    test.auroc(&model, purpose)
}

/// Roster AUROC when training on the (possibly noisy) real training rows,
/// with the same split, noise and seeds as [`run_condition`].
pub fn evaluate_real_reference(config: &RunConfig) -> Result<Vec<ModelAuroc>> {
    config.validate()?;
    let (split, train, _) = prepare(config)?;
    let test = TestSet::new(split.test);
    let roster_seed = derive_seed(config.seed, "roster");
    Ok(config
        .roster
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            let spec =
                ClassifierSpec::new(kind, derive_seed_indexed(roster_seed, "roster", i as u64));
            ModelAuroc {
                kind,
                auroc: train_and_score(&spec, &train, &test, &format!("real/{kind}")).ok(),
            }
        })
        .collect())
}
