use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{
    load_csv, simulate_with, CorrelationSource, CsvOptions, Dataset, KindHint, SimulationSpec,
};
use crate::error::{Error, Result};
use crate::generators::GeneratorSpec;
use crate::learners::ClassifierKind;
use crate::profiling::ProfilerConfig;
use crate::rng::derive_seed;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Preprocessing {
    /// One generator on all training rows.
    #[default]
    Baseline,
    /// Separate generators for Hard rows and for the rest.
    EasyHard,
    /// One generator per tag; needs a three-way profiler.
    EasyAmbiguousHard,
}

impl Preprocessing {
    pub const ALL: [Preprocessing; 3] = [
        Preprocessing::Baseline,
        Preprocessing::EasyHard,
        Preprocessing::EasyAmbiguousHard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preprocessing::Baseline => "baseline",
            Preprocessing::EasyHard => "easy_hard",
            Preprocessing::EasyAmbiguousHard => "easy_ambiguous_hard",
        }
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Postprocessing {
    #[default]
    Baseline,
    /// Profile the synthetic data and drop rows tagged Hard.
    NoHard,
}

impl Postprocessing {
    pub const ALL: [Postprocessing; 2] = [Postprocessing::Baseline, Postprocessing::NoHard];

    pub fn name(self) -> &'static str {
        match self {
            Postprocessing::Baseline => "baseline",
            Postprocessing::NoHard => "no_hard",
        }
    }
}

macro_rules! named_enum_impls {
    ($t:ty, $what:literal) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $t {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                <$t>::ALL
                    .into_iter()
                    .find(|v| v.name() == s)
                    .ok_or_else(|| {
                        Error::InvalidConfig(format!(concat!("unknown ", $what, " {:?}"), s))
                    })
            }
        }
    };
}

named_enum_impls!(Preprocessing, "preprocessing strategy");
named_enum_impls!(Postprocessing, "postprocessing strategy");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        label_column: String,
        /// Name used in result files; defaults to the file stem.
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        hints: BTreeMap<String, KindHint>,
    },
    Simulated {
        n_features: usize,
        n_samples: usize,
        #[serde(default)]
        correlations: CorrelationSource,
        /// Dataset seed; derived from the run seed when absent.
        #[serde(default)]
        seed: Option<u64>,
    },
}

impl DatasetSource {
    pub fn simulated(n_features: usize, n_samples: usize) -> Self {
        DatasetSource::Simulated {
            n_features,
            n_samples,
            correlations: CorrelationSource::default(),
            seed: None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            DatasetSource::Csv { path, name, .. } => name.clone().unwrap_or_else(|| {
                path.file_stem()
                    .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned())
            }),
            DatasetSource::Simulated {
                n_features,
                n_samples,
                ..
            } => format!("sim-d{n_features}-n{n_samples}"),
        }
    }

    pub fn load(&self, run_seed: u64) -> Result<Dataset> {
        match self {
            DatasetSource::Csv {
                path,
                label_column,
                hints,
                ..
            } => {
                let options = CsvOptions {
                    label_column: label_column.clone(),
                    hints: hints.clone(),
                };
                load_csv(path, &options)
            }
            DatasetSource::Simulated {
                n_features,
                n_samples,
                correlations,
                seed,
            } => {
                let spec = SimulationSpec {
                    n_features: *n_features,
                    n_samples: *n_samples,
                    correlations: correlations.clone(),
                };
                let seed = seed.unwrap_or_else(|| derive_seed(run_seed, "dataset"));
                Ok(simulate_with(&spec, seed)?.data)
            }
        }
    }
}

fn default_train_fraction() -> f64 {
    0.8
}
fn default_synth_ratio() -> f64 {
    1.0
}
fn default_roster() -> Vec<ClassifierKind> {
    ClassifierKind::ALL.to_vec()
}
fn default_importance_model() -> ClassifierKind {
    ClassifierKind::RandomForest
}

/// One experimental condition.
///
/// The `seed` fields of the profiler and generator are offsets: the seeds
/// actually used are derived from the run seed and those offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    pub seed: u64,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// Fraction of training labels flipped before profiling.
    #[serde(default)]
    pub noise: f64,
    pub profiler: ProfilerConfig,
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub preprocessing: Preprocessing,
    #[serde(default)]
    pub postprocessing: Postprocessing,
    #[serde(default = "default_roster")]
    pub roster: Vec<ClassifierKind>,
    /// Synthetic rows per preprocessed training row.
    #[serde(default = "default_synth_ratio")]
    pub synth_size_ratio: f64,
    /// Also evaluate the roster on the real training data after `no_hard`.
    #[serde(default)]
    pub include_real_postprocess_condition: bool,
    /// Model whose importances are compared for feature selection.
    #[serde(default = "default_importance_model")]
    pub importance_model: ClassifierKind,
}

impl RunConfig {
    pub fn new(
        dataset: DatasetSource,
        profiler: ProfilerConfig,
        generator: GeneratorSpec,
        seed: u64,
    ) -> Self {
        Self {
            dataset,
            seed,
            train_fraction: default_train_fraction(),
            noise: 0.0,
            profiler,
            generator,
            preprocessing: Preprocessing::Baseline,
            postprocessing: Postprocessing::Baseline,
            roster: default_roster(),
            synth_size_ratio: default_synth_ratio(),
            include_real_postprocess_condition: false,
            importance_model: default_importance_model(),
        }
    }

    pub fn with_strategy(mut self, pre: Preprocessing, post: Postprocessing) -> Self {
        self.preprocessing = pre;
        self.postprocessing = post;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!(
                "train_fraction {} outside (0, 1)",
                self.train_fraction
            ));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return bad(format!("noise {} outside [0, 1]", self.noise));
        }
        if !(self.synth_size_ratio > 0.0 && self.synth_size_ratio.is_finite()) {
            return bad(format!(
                "synth_size_ratio {} must be positive",
                self.synth_size_ratio
            ));
        }
        if self.roster.is_empty() {
            return bad("roster is empty".into());
        }
        if self.preprocessing == Preprocessing::EasyAmbiguousHard
            && !self.profiler.method.is_three_way()
        {
            return bad(format!(
                "easy_ambiguous_hard needs a profiler that tags Ambiguous rows, not {}",
                self.profiler.method
            ));
        }
        self.profiler.validate()?;
        self.generator.validate()?;
        if let DatasetSource::Simulated {
            n_features,
            n_samples,
            ..
        } = &self.dataset
        {
            if *n_features == 0 || *n_samples < 2 {
                return bad("simulated dataset needs at least one feature and two rows".into());
            }
        }
        Ok(())
    }

    /// Dataset component of result names; carries the noise level when set.
    pub fn dataset_label(&self) -> String {
        let name = self.dataset.name();
        if self.noise > 0.0 {
            format!("{name}-noise{}", self.noise)
        } else {
            name
        }
    }

    /// `<dataset>_<profiler>_<generator>_<pre>_<post>_<seed>.json`
    pub fn result_file_name(&self) -> String {
        format!(
            "{}_{}_{}_{}_{}_{}.json",
            self.dataset_label(),
            self.profiler.label(),
            self.generator.kind,
            self.preprocessing,
            self.postprocessing,
            self.seed
        )
    }
}
