use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Postprocessing, Preprocessing};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::generators::Segment;
use crate::learners::{
    feature_importance, train, ClassifierKind, ClassifierSpec, TrainedClassifier,
};
use crate::metrics::{
    auroc, inverse_kl, mmd_rbf, spearman, wasserstein_mean, INVERSE_KL_BINS, MMD_MAX_ROWS,
};
use crate::profiling::{profile_dataset, Profile, ProfileAssignment, ProfilerConfig};
use crate::rng::derive_seed_indexed;

/// Held-out rows. The only operation is scoring a trained model, and every
/// access is logged with its purpose.
#[derive(Debug)]
pub struct TestSet {
    data: Dataset,
    log: Mutex<Vec<String>>,
}

impl TestSet {
    pub fn new(data: Dataset) -> Self {
        Self {
            data,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    /// AUROC of `model` on the held-out rows.
    pub fn auroc(&self, model: &TrainedClassifier, purpose: &str) -> Result<f64> {
        self.log.lock().expect("log lock").push(purpose.to_string());
        let p = model.predict_proba(self.data.features())?;
        auroc(&p, self.data.labels())
    }

    pub fn access_log(&self) -> Vec<String> {
        self.log.lock().expect("log lock").clone()
    }
}

/// Splits training rows into generator segments.
///
/// Two-way grouping puts Ambiguous rows on the easy side. Empty segments are
/// dropped with a warning.
pub fn preprocess(
    train: &Dataset,
    assignment: &ProfileAssignment,
    strategy: Preprocessing,
) -> Result<Vec<(Segment, Dataset)>> {
    if assignment.row_ids != train.row_ids() {
        return Err(Error::InvalidInput(
            "profile assignment does not cover the training rows in order".into(),
        ));
    }
    if strategy == Preprocessing::EasyAmbiguousHard && !assignment.method.is_three_way() {
        return Err(Error::InvalidConfig(format!(
            "easy_ambiguous_hard is undefined for {}",
            assignment.method
        )));
    }
    let groups: Vec<(Segment, Vec<usize>)> = match strategy {
        Preprocessing::Baseline => vec![(Segment::All, (0..train.n()).collect())],
        Preprocessing::EasyHard => {
            let (hard, easy): (Vec<usize>, Vec<usize>) =
                (0..train.n()).partition(|&i| assignment.tags[i] == Profile::Hard);
            vec![(Segment::Easy, easy), (Segment::Hard, hard)]
        }
        Preprocessing::EasyAmbiguousHard => [
            (Segment::Easy, Profile::Easy),
            (Segment::Ambiguous, Profile::Ambiguous),
            (Segment::Hard, Profile::Hard),
        ]
        .into_iter()
        .map(|(s, p)| (s, assignment.positions_with(p)))
        .collect(),
    };
    Ok(groups
        .into_iter()
        .filter(|(tag, idx)| {
            if idx.is_empty() {
                log::warn!("{strategy}: segment {tag} is empty and is dropped");
            }
            !idx.is_empty()
        })
        .map(|(tag, idx)| (tag, train.subset(&idx)))
        .collect())
}

/// Applies the postprocessing strategy. `no_hard` profiles `synth` with a
/// scorer fitted on `synth` itself and keeps the rows not tagged Hard; the
/// assignment used for filtering is returned alongside.
pub fn postprocess(
    synth: &Dataset,
    profiler: &ProfilerConfig,
    strategy: Postprocessing,
    seed: u64,
) -> Result<(Dataset, Option<ProfileAssignment>)> {
    match strategy {
        Postprocessing::Baseline => Ok((synth.clone(), None)),
        Postprocessing::NoHard => {
            if synth.is_empty() {
                return Err(Error::InvalidInput("no rows to postprocess".into()));
            }
            let mut config = profiler.clone();
            config.seed = seed;
            let profiled = profile_dataset(synth, &config)?;
            let keep: Vec<usize> = (0..synth.n())
                .filter(|&i| profiled.assignment.tags[i] != Profile::Hard)
                .collect();
            if keep.is_empty() {
                return Err(Error::InvalidInput(
                    "every synthetic row was tagged Hard".into(),
                ));
            }
            Ok((synth.subset(&keep), Some(profiled.assignment)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelUtility {
    pub kind: ClassifierKind,
    pub real_auroc: Option<f64>,
    pub synth_auroc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityResult {
    pub models: Vec<ModelUtility>,
    /// Rank agreement of the roster between real and synthetic training.
    pub model_selection_rho: Option<f64>,
    /// Rank agreement of feature importances between real and synthetic training.
    pub feature_selection_rho: Option<f64>,
    pub importance_model: ClassifierKind,
    /// Why any field above is missing.
    pub missing: Vec<String>,
}

impl UtilityResult {
    /// Mean over members with a value.
    pub fn mean_synth_auroc(&self) -> Option<f64> {
        mean(self.models.iter().filter_map(|m| m.synth_auroc))
    }

    pub fn mean_real_auroc(&self) -> Option<f64> {
        mean(self.models.iter().filter_map(|m| m.real_auroc))
    }
}

pub(crate) fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn train_all(
    kinds: &[ClassifierKind],
    data: &Dataset,
    seed: u64,
) -> Vec<Result<TrainedClassifier>> {
    kinds
        .par_iter()
        .enumerate()
        .map(|(i, &k)| {
            train(
                &ClassifierSpec::new(k, derive_seed_indexed(seed, "roster", i as u64)),
                data,
            )
        })
        .collect()
}

/// Trains the roster on real and on synthetic rows and scores both on the
/// held-out set. Metric failures become missing values.
pub fn evaluate_utility(
    real_train: &Dataset,
    synth: &Dataset,
    test: &TestSet,
    roster: &[ClassifierKind],
    importance_model: ClassifierKind,
    seed: u64,
) -> UtilityResult {
    let mut missing = Vec::new();
    let real_models = train_all(roster, real_train, seed);
    let synth_models = train_all(roster, synth, seed);
    let mut score =
        |side: &str, kind: ClassifierKind, m: &Result<TrainedClassifier>| -> Option<f64> {
            let r = m.as_ref().map_err(|e| e.to_string()).and_then(|m| {
                test.auroc(m, &format!("{side}/{kind}"))
                    .map_err(|e| e.to_string())
            });
            r.map_err(|e| missing.push(format!("{side} {kind} auroc: {e}")))
                .ok()
        };
    let models: Vec<ModelUtility> = roster
        .iter()
        .zip(real_models.iter().zip(&synth_models))
        .map(|(&kind, (r, s))| ModelUtility {
            kind,
            real_auroc: score("real", kind, r),
            synth_auroc: score("synth", kind, s),
        })
        .collect();

    let (a, b): (Vec<f64>, Vec<f64>) = models
        .iter()
        .filter_map(|m| Some((m.real_auroc?, m.synth_auroc?)))
        .unzip();
    let model_selection_rho = if a.len() < 2 {
        missing.push(format!(
            "model selection: {} comparable roster members",
            a.len()
        ));
        None
    } else {
        spearman(&a, &b)
            .map_err(|e| missing.push(format!("model selection: {e}")))
            .ok()
    };

    let importance_of =
        |data: &Dataset, idx: Option<usize>, models: &[Result<TrainedClassifier>]| {
            let fitted;
            let model = match idx {
                Some(i) => models[i].as_ref().map_err(|e| e.to_string())?,
                None => {
                    let spec = ClassifierSpec::new(
                        importance_model,
                        derive_seed_indexed(seed, "importance", 0),
                    );
                    fitted = train(&spec, data).map_err(|e| e.to_string())?;
                    &fitted
                }
            };
            feature_importance(model)
                .map(|f| f.into_vec())
                .map_err(|e| e.to_string())
        };
    let idx = roster.iter().position(|&k| k == importance_model);
    let feature_selection_rho = match (
        importance_of(real_train, idx, &real_models),
        importance_of(synth, idx, &synth_models),
    ) {
        (Ok(r), Ok(s)) => spearman(&r, &s)
            .map_err(|e| missing.push(format!("feature selection: {e}")))
            .ok(),
        (Err(e), _) | (_, Err(e)) => {
            missing.push(format!("feature selection: {e}"));
            None
        }
    };
    UtilityResult {
        models,
        model_selection_rho,
        feature_selection_rho,
        importance_model,
        missing,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityResult {
    pub inverse_kl: Option<f64>,
    pub mmd: Option<f64>,
    pub wasserstein: Option<f64>,
    pub missing: Vec<String>,
}

/// Fidelity of `synth` against the real training rows.
pub fn evaluate_fidelity(real_train: &Dataset, synth: &Dataset, seed: u64) -> FidelityResult {
    let mut missing = Vec::new();
    let mut keep = |name: &str, r: Result<crate::metrics::MetricValue>| {
        r.map(|m| m.value)
            .map_err(|e| missing.push(format!("{name}: {e}")))
            .ok()
    };
    let inverse_kl = keep("inverse_kl", inverse_kl(real_train, synth, INVERSE_KL_BINS));
    let mmd = keep("mmd", mmd_rbf(real_train, synth, MMD_MAX_ROWS, seed));
    let wasserstein = keep("wasserstein", wasserstein_mean(real_train, synth));
    FidelityResult {
        inverse_kl,
        mmd,
        wasserstein,
        missing,
    }
}
