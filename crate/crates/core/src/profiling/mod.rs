//! Per-sample data profiling.
//!
//! Three scoring methods are supported:
//!
//! * `cleanlab`: confident learning on out-of-fold probabilities. The score is
//!   the self-confidence (held-out probability of the given label); hardness is
//!   its complement.
//! * `dataiq`: training dynamics; confidence and aleatoric uncertainty
//!   `mean_t p_t (1 - p_t)` of the own-label probability across checkpoints.
//! * `datamaps`: training dynamics; confidence and variability (population
//!   standard deviation of `p_t`).
//!
//! Tags follow fixed rules. For the dynamics methods a sample is Hard when its
//! confidence is at most 0.25 and its uncertainty is below the threshold, Easy
//! when confidence is at least 0.75 and uncertainty is below the threshold,
//! and Ambiguous otherwise. Confident learning only produces Easy and Hard.

mod assign;
mod scores;

pub use assign::{assign_profiles, detection_prf, Prf, ProfileCounts};
pub use scores::{confident_learning_scores, estimate_noise_matrix, training_dynamics_scores};

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::{out_of_fold_proba, train_with_checkpoints, ClassifierKind, ClassifierSpec};
use crate::rng::derive_seed;

pub const EASY_CONFIDENCE: f64 = 0.75;
pub const HARD_CONFIDENCE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Easy,
    Ambiguous,
    Hard,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Easy => "easy",
            Profile::Ambiguous => "ambiguous",
            Profile::Hard => "hard",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileMethod {
    Cleanlab,
    #[serde(rename = "dataiq")]
    DataIq,
    #[serde(rename = "datamaps")]
    DataMaps,
}

impl ProfileMethod {
    pub const ALL: [ProfileMethod; 3] = [
        ProfileMethod::Cleanlab,
        ProfileMethod::DataIq,
        ProfileMethod::DataMaps,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProfileMethod::Cleanlab => "cleanlab",
            ProfileMethod::DataIq => "dataiq",
            ProfileMethod::DataMaps => "datamaps",
        }
    }

    /// Whether the method can tag samples Ambiguous.
    pub fn is_three_way(self) -> bool {
        !matches!(self, ProfileMethod::Cleanlab)
    }
}

impl fmt::Display for ProfileMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProfileMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProfileMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown profiling method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Raw threshold: uncertainty cutoff (dynamics) or quality cutoff (cleanlab).
    Value,
    /// Threshold at the `tau`-th percentile of the uncertainty distribution.
    Percentile,
    /// Cleanlab: number of Hard samples taken from the off-diagonal of the
    /// confident joint. Dynamics methods: value mode at 0.2.
    Default,
}

impl ThresholdMode {
    pub fn name(self) -> &'static str {
        match self {
            ThresholdMode::Value => "value",
            ThresholdMode::Percentile => "percentile",
            ThresholdMode::Default => "default",
        }
    }
}

impl FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "value" => Ok(ThresholdMode::Value),
            "percentile" => Ok(ThresholdMode::Percentile),
            "default" => Ok(ThresholdMode::Default),
            _ => Err(Error::InvalidConfig(format!(
                "unknown threshold mode {s:?}"
            ))),
        }
    }
}

pub const DEFAULT_TAU: f64 = 0.2;
pub const DEFAULT_CHECKPOINTS: usize = 20;
pub const DEFAULT_FOLDS: usize = 5;

fn default_tau() -> f64 {
    DEFAULT_TAU
}
fn default_mode() -> ThresholdMode {
    ThresholdMode::Value
}
fn default_learner() -> ClassifierKind {
    ClassifierKind::GradientBoosting
}
fn default_checkpoints() -> usize {
    DEFAULT_CHECKPOINTS
}
fn default_folds() -> usize {
    DEFAULT_FOLDS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfilerConfig {
    pub method: ProfileMethod,
    #[serde(default = "default_mode")]
    pub mode: ThresholdMode,
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Scoring learner; must be iterative for the dynamics methods.
    #[serde(default = "default_learner")]
    pub learner: ClassifierKind,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ProfilerConfig {
    fn default() -> Self {
        Self::new(ProfileMethod::Cleanlab)
    }
}

impl ProfilerConfig {
    /// Value mode at `tau = 0.2` with the boosting learner.
    pub fn new(method: ProfileMethod) -> Self {
        Self {
            method,
            mode: ThresholdMode::Value,
            tau: DEFAULT_TAU,
            learner: ClassifierKind::GradientBoosting,
            checkpoints: DEFAULT_CHECKPOINTS,
            folds: DEFAULT_FOLDS,
            seed: 0,
        }
    }

    pub fn with_threshold(mut self, mode: ThresholdMode, tau: f64) -> Self {
        self.mode = mode;
        self.tau = tau;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match self.mode {
            ThresholdMode::Percentile => {
                if self.method == ProfileMethod::Cleanlab {
                    return bad("percentile mode is not defined for cleanlab".into());
                }
                if !(20.0..=80.0).contains(&self.tau) {
                    return bad(format!("percentile tau {} outside [20, 80]", self.tau));
                }
            }
            ThresholdMode::Value => {
                let ok = match self.method {
                    ProfileMethod::Cleanlab => self.tau > 0.0 && self.tau < 1.0,
                    _ => self.tau > 0.0 && self.tau <= 0.25,
                };
                if !ok {
                    return bad(format!(
                        "value tau {} out of range for {}",
                        self.tau, self.method
                    ));
                }
            }
            ThresholdMode::Default => {}
        }
        if self.method.is_three_way() {
            if !self.learner.is_iterative() {
                return bad(format!(
                    "{} needs an iteratively trained learner",
                    self.method
                ));
            }
            if self.checkpoints < 2 {
                return bad("need at least 2 checkpoints".into());
            }
        } else if self.folds < 2 {
            return bad("need at least 2 folds".into());
        }
        Ok(())
    }

    /// Short label such as `cleanlab-value-0.2`, used in file names.
    pub fn label(&self) -> String {
        match self.mode {
            ThresholdMode::Default => format!("{}-default", self.method),
            m => format!("{}-{}-{}", self.method, m.name(), self.tau),
        }
    }
}

/// 2x2 confident joint `counts[given][predicted]`, its normalization and the
/// per-class thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseMatrix {
    pub counts: [[u64; 2]; 2],
    pub joint: [[f64; 2]; 2],
    pub thresholds: [f64; 2],
}

impl NoiseMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn off_diagonal(&self) -> u64 {
        self.counts[0][1] + self.counts[1][0]
    }
}

/// Per-sample scores; each method populates its own fields.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleScore {
    pub confidence: Option<Vec<f64>>,
    pub aleatoric: Option<Vec<f64>>,
    pub variability: Option<Vec<f64>>,
    pub self_confidence: Option<Vec<f64>>,
    /// Method-specific score; larger is harder.
    pub hardness: Vec<f64>,
    pub noise_matrix: Option<NoiseMatrix>,
}

impl SampleScore {
    pub fn len(&self) -> usize {
        self.hardness.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hardness.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRecord {
    pub mode: ThresholdMode,
    pub tau: f64,
    /// Cutoff actually applied (the resolved percentile in percentile mode,
    /// the Hard count in cleanlab default mode).
    pub effective: f64,
    /// Percentile mode fell back to value mode on constant scores.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileAssignment {
    pub row_ids: Vec<u64>,
    pub tags: Vec<Profile>,
    pub method: ProfileMethod,
    pub threshold: ThresholdRecord,
}

impl ProfileAssignment {
    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn counts(&self) -> ProfileCounts {
        ProfileCounts::from_tags(&self.tags)
    }

    pub fn ids_with(&self, tag: Profile) -> Vec<u64> {
        self.row_ids
            .iter()
            .zip(&self.tags)
            .filter(|(_, t)| **t == tag)
            .map(|(id, _)| *id)
            .collect()
    }

    /// Positions of rows carrying `tag`.
    pub fn positions_with(&self, tag: Profile) -> Vec<usize> {
        (0..self.tags.len())
            .filter(|&i| self.tags[i] == tag)
            .collect()
    }
}

/// Scores and tags of one dataset.
#[derive(Debug, Clone)]
pub struct Profiled {
    pub scores: SampleScore,
    pub assignment: ProfileAssignment,
}

/// Fits the configured scoring learner on `data` and tags every row.
pub fn profile_dataset(data: &Dataset, config: &ProfilerConfig) -> Result<Profiled> {
    config.validate()?;
    let spec = ClassifierSpec::new(config.learner, derive_seed(config.seed, "profiler/learner"));
    let scores = match config.method {
        ProfileMethod::Cleanlab => {
            let oof = out_of_fold_proba(
                &spec,
                data,
                config.folds,
                derive_seed(config.seed, "profiler/folds"),
            )?;
            confident_learning_scores(&oof.proba, data.labels())?
        }
        ProfileMethod::DataIq | ProfileMethod::DataMaps => {
            let (_, trace) = train_with_checkpoints(&spec, data, config.checkpoints)?;
            training_dynamics_scores(&trace)
        }
    };
    let assignment = assign_profiles(&scores, config, data.row_ids())?;
    Ok(Profiled { scores, assignment })
}

/// Writes `row_id,method,tag,confidence,aleatoric,variability,hardness`;
/// unavailable scores are left empty.
pub fn write_assignment_csv(
    assignment: &ProfileAssignment,
    scores: &SampleScore,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(
        w,
        "row_id,method,tag,confidence,aleatoric,variability,hardness"
    )
    .map_err(io)?;
    let cell =
        |v: &Option<Vec<f64>>, i: usize| v.as_ref().map_or(String::new(), |v| v[i].to_string());
    for i in 0..assignment.len() {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            assignment.row_ids[i],
            assignment.method,
            assignment.tags[i],
            cell(&scores.confidence, i),
            cell(&scores.aleatoric, i),
            cell(&scores.variability, i),
            scores.hardness[i]
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(ProfilerConfig::default().validate().is_ok());
        let c =
            ProfilerConfig::new(ProfileMethod::DataIq).with_threshold(ThresholdMode::Value, 0.3);
        assert!(c.validate().is_err());
        let c = ProfilerConfig::new(ProfileMethod::DataMaps)
            .with_threshold(ThresholdMode::Percentile, 50.0);
        assert!(c.validate().is_ok());
        let c = ProfilerConfig::new(ProfileMethod::DataMaps)
            .with_threshold(ThresholdMode::Percentile, 90.0);
        assert!(c.validate().is_err());
        let c = ProfilerConfig::new(ProfileMethod::Cleanlab)
            .with_threshold(ThresholdMode::Percentile, 50.0);
        assert!(c.validate().is_err());
        let mut c = ProfilerConfig::new(ProfileMethod::DataIq);
        c.learner = ClassifierKind::Knn;
        assert!(c.validate().is_err());
        let c = ProfilerConfig::new(ProfileMethod::Cleanlab)
            .with_threshold(ThresholdMode::Default, 0.0);
        assert!(c.validate().is_ok());
        assert_eq!(c.label(), "cleanlab-default");
    }

    #[test]
    fn names_parse() {
        for m in ProfileMethod::ALL {
            assert_eq!(m.name().parse::<ProfileMethod>().unwrap(), m);
        }
        assert!("confident".parse::<ProfileMethod>().is_err());
        let json = serde_json::to_string(&ProfileMethod::DataIq).unwrap();
        assert_eq!(json, "\"dataiq\"");
    }
}
