//! From-scratch binary classifiers with probability outputs.
//!
//! Fixed hyperparameters per kind:
//!
//! | kind | settings |
//! |------|----------|
//! | `logistic_regression` | full-batch gradient descent, rate 0.1, 200 iterations, L2 1e-4, standardized one-hot features |
//! | `decision_tree` | CART, Gini, max depth 8, min leaf 5 |
//! | `random_forest` | 100 bootstrap trees, `floor(sqrt(d))` features per split, max depth 12 |
//! | `gaussian_nb` | per-class diagonal Gaussians, variance floor 1e-9 |
//! | `knn` | k = 5, Euclidean on standardized one-hot features, vote fraction |
//! | `gradient_boosting` | 100 rounds, depth-3 trees, rate 0.1, logistic loss |
//!
//! Tree-based learners consume categorical codes directly; the others expand
//! them one-hot.

mod boosting;
mod encode;
mod forest;
mod knn;
mod logistic;
mod naive_bayes;
mod tree;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ColumnSchema, Dataset, Matrix};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, derive_seed_indexed, rng_from_seed};

pub use knn::NEIGHBORS as KNN_NEIGHBORS;

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LogisticRegression,
    DecisionTree,
    RandomForest,
    GaussianNb,
    Knn,
    GradientBoosting,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 6] = [
        ClassifierKind::LogisticRegression,
        ClassifierKind::DecisionTree,
        ClassifierKind::RandomForest,
        ClassifierKind::GaussianNb,
        ClassifierKind::Knn,
        ClassifierKind::GradientBoosting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::LogisticRegression => "logistic_regression",
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::GaussianNb => "gaussian_nb",
            ClassifierKind::Knn => "knn",
            ClassifierKind::GradientBoosting => "gradient_boosting",
        }
    }

    /// Kinds trained iteratively, which can emit checkpoint traces.
    pub fn is_iterative(self) -> bool {
        matches!(
            self,
            ClassifierKind::LogisticRegression | ClassifierKind::GradientBoosting
        )
    }

    fn min_samples(self) -> usize {
        match self {
            ClassifierKind::Knn => KNN_NEIGHBORS,
            _ => 2,
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown classifier kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    #[serde(default)]
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind, seed: u64) -> Self {
        Self { kind, seed }
    }
}

#[derive(Debug, Clone)]
enum Model {
    Logistic(logistic::LogisticModel),
    Tree(forest::TreeModel),
    Forest(forest::ForestModel),
    NaiveBayes(naive_bayes::NaiveBayesModel),
    Knn(knn::KnnModel),
    Boosting(boosting::BoostingModel),
}

/// A fitted classifier; immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct TrainedClassifier {
    spec: ClassifierSpec,
    schema: Vec<ColumnSchema>,
    model: Model,
}

impl TrainedClassifier {
    pub fn spec(&self) -> &ClassifierSpec {
        &self.spec
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    /// Probability of class 1 for each row of `features`.
    pub fn predict_proba(&self, features: &Matrix) -> Result<Vec<f64>> {
        if features.cols() != self.schema.len() {
            return Err(Error::DimensionMismatch {
                expected: self.schema.len(),
                got: features.cols(),
            });
        }
        let p = match &self.model {
            Model::Logistic(m) => m.predict(features),
            Model::Tree(m) => m.predict(features),
            Model::Forest(m) => m.predict(features),
            Model::NaiveBayes(m) => m.predict(features),
            Model::Knn(m) => m.predict(features),
            Model::Boosting(m) => m.predict(features),
        };
        Ok(p.into_iter().map(|v| v.clamp(0.0, 1.0)).collect())
    }
}

pub fn predict_proba(model: &TrainedClassifier, features: &Matrix) -> Result<Vec<f64>> {
    model.predict_proba(features)
}

fn check_trainable(spec: &ClassifierSpec, data: &Dataset) -> Result<()> {
    if data.d() == 0 {
        return Err(Error::InvalidInput("dataset has no feature columns".into()));
    }
    let need = spec.kind.min_samples();
    if data.n() < need {
        return Err(Error::TooFewSamples {
            needed: need,
            got: data.n(),
        });
    }
    data.require_both_classes()
}

pub fn train(spec: &ClassifierSpec, data: &Dataset) -> Result<TrainedClassifier> {
    check_trainable(spec, data)?;
    let x = data.features();
    let y = data.labels();
    let kinds = data.kinds();
    let model = match spec.kind {
        ClassifierKind::LogisticRegression => Model::Logistic(logistic::fit(x, &kinds, y, &[]).0),
        ClassifierKind::DecisionTree => Model::Tree(forest::fit_tree(x, y)),
        ClassifierKind::RandomForest => Model::Forest(forest::fit_forest(
            x,
            y,
            derive_seed(spec.seed, "random_forest"),
        )),
        ClassifierKind::GaussianNb => Model::NaiveBayes(naive_bayes::fit(x, &kinds, y)),
        ClassifierKind::Knn => Model::Knn(knn::fit(x, &kinds, y)),
        ClassifierKind::GradientBoosting => Model::Boosting(boosting::fit(x, y, &[]).0),
    };
    Ok(TrainedClassifier {
        spec: *spec,
        schema: data.schema().to_vec(),
        model,
    })
}

/// Per-sample own-label probability at each training checkpoint, `n x T`
/// row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointTrace {
    n: usize,
    checkpoints: usize,
    values: Vec<f64>,
}

impl CheckpointTrace {
    pub fn new(n: usize, checkpoints: usize, values: Vec<f64>) -> Result<Self> {
        if checkpoints < 2 {
            return Err(Error::InvalidInput(
                "a trace needs at least 2 checkpoints".into(),
            ));
        }
        if values.len() != n * checkpoints {
            return Err(Error::InvalidInput(format!(
                "trace buffer of length {} does not match {n}x{checkpoints}",
                values.len()
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput(
                "trace values must lie in [0, 1]".into(),
            ));
        }
        Ok(Self {
            n,
            checkpoints,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn checkpoints(&self) -> usize {
        self.checkpoints
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.values[i * self.checkpoints..(i + 1) * self.checkpoints]
    }

    pub fn get(&self, i: usize, t: usize) -> f64 {
        self.values[i * self.checkpoints + t]
    }
}

/// Iteration counts of `t` evenly spaced checkpoints over `total` iterations,
/// from the untrained model (0) to the final one (`total`).
pub fn checkpoint_schedule(total: usize, t: usize) -> Vec<usize> {
    (0..t)
        .map(|i| ((i * total) as f64 / (t - 1) as f64).round() as usize)
        .collect()
}

pub fn train_with_checkpoints(
    spec: &ClassifierSpec,
    data: &Dataset,
    checkpoints: usize,
) -> Result<(TrainedClassifier, CheckpointTrace)> {
    if !spec.kind.is_iterative() {
        return Err(Error::Unsupported(format!(
            "{} has no training checkpoints",
            spec.kind
        )));
    }
    if checkpoints < 2 {
        return Err(Error::InvalidInput("need at least 2 checkpoints".into()));
    }
    check_trainable(spec, data)?;
    let x = data.features();
    let y = data.labels();
    let (model, snaps) = match spec.kind {
        ClassifierKind::LogisticRegression => {
            let sched = checkpoint_schedule(logistic::ITERATIONS, checkpoints);
            let (m, s) = logistic::fit(x, &data.kinds(), y, &sched);
            (Model::Logistic(m), s)
        }
        ClassifierKind::GradientBoosting => {
            let sched = checkpoint_schedule(boosting::ROUNDS, checkpoints);
            let (m, s) = boosting::fit(x, y, &sched);
            (Model::Boosting(m), s)
        }
        _ => unreachable!("checked iterative"),
    };
    debug_assert_eq!(snaps.len(), checkpoints);
    let n = data.n();
    let mut values = Vec::with_capacity(n * checkpoints);
    for i in 0..n {
        for snap in &snaps {
            let p = snap[i].clamp(0.0, 1.0);
            values.push(if y[i] == 1 { p } else { 1.0 - p });
        }
    }
    let trace = CheckpointTrace::new(n, checkpoints, values)?;
    Ok((
        TrainedClassifier {
            spec: *spec,
            schema: data.schema().to_vec(),
            model,
        },
        trace,
    ))
}

/// Held-out class probabilities with the fold each row was held out in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutOfFold {
    pub proba: Vec<[f64; 2]>,
    pub folds: Vec<usize>,
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidInput("need at least 2 folds".into()));
    }
    let mut folds = vec![0; labels.len()];
    for class in 0..2u8 {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < k {
            return Err(Error::ClassTooSmall {
                class,
                count: idx.len(),
                needed: k,
            });
        }
        idx.shuffle(&mut rng_from_seed(derive_seed_indexed(
            seed,
            "folds",
            u64::from(class),
        )));
        for (pos, i) in idx.into_iter().enumerate() {
            folds[i] = pos % k;
        }
    }
    Ok(folds)
}

pub fn out_of_fold_proba(
    spec: &ClassifierSpec,
    data: &Dataset,
    k: usize,
    seed: u64,
) -> Result<OutOfFold> {
    let folds = stratified_folds(data.labels(), k, seed)?;
    let fitted: Vec<Result<(Vec<usize>, Vec<f64>)>> = (0..k)
        .into_par_iter()
        .map(|f| {
            let (held, kept): (Vec<usize>, Vec<usize>) =
                (0..data.n()).partition(|&i| folds[i] == f);
            let fold_spec =
                ClassifierSpec::new(spec.kind, derive_seed_indexed(spec.seed, "fold", f as u64));
            let model = train(&fold_spec, &data.subset(&kept))?;
            let p = model.predict_proba(&data.features().select_rows(&held))?;
            Ok((held, p))
        })
        .collect();
    let mut proba = vec![[0.5, 0.5]; data.n()];
    for r in fitted {
        let (held, p) = r?;
        for (i, p1) in held.into_iter().zip(p) {
            proba[i] = [1.0 - p1, p1];
        }
    }
    Ok(OutOfFold { proba, folds })
}

/// Nonnegative per-feature importances summing to 1 (all zero for a model
/// that never split or has all-zero weights).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance(Vec<f64>);

impl FeatureImportance {
    fn normalized(raw: Vec<f64>) -> Self {
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            Self(raw.into_iter().map(|v| v / total).collect())
        } else {
            Self(vec![0.0; raw.len()])
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Total impurity decrease per feature for tree models (Gini for trees and
/// forests, squared error of the boosting trees), `|coef| * std` for logistic
/// regression; normalized to sum to 1.
pub fn feature_importance(model: &TrainedClassifier) -> Result<FeatureImportance> {
    let raw = match &model.model {
        Model::Tree(m) => m.importance.clone(),
        Model::Forest(m) => m.importance.clone(),
        Model::Boosting(m) => m.importance.clone(),
        Model::Logistic(m) => m.importance(model.schema.len()),
        Model::NaiveBayes(_) | Model::Knn(_) => {
            return Err(Error::Unsupported(format!(
                "{} has no inherent feature importance",
                model.spec.kind
            )))
        }
    };
    Ok(FeatureImportance::normalized(raw))
}

/// Staged class-1 probabilities of a boosting model after `rounds` trees.
pub fn staged_proba(
    model: &TrainedClassifier,
    features: &Matrix,
    rounds: usize,
) -> Result<Vec<f64>> {
    match &model.model {
        Model::Boosting(m) => Ok(m.predict_staged(features, rounds)),
        _ => Err(Error::Unsupported(
            "staged prediction needs gradient boosting".into(),
        )),
    }
}
