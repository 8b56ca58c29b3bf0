//! Versioned TOML experiment documents.

use std::path::{Path, PathBuf};

use anyhow::Context;
use dcsynth_core::generators::GeneratorSpec;
use dcsynth_core::learners::ClassifierKind;
use dcsynth_core::noisebench::{NoiseSweepConfig, Strategy, ThresholdBenchConfig};
use dcsynth_core::pipeline::{DatasetSource, RunConfig};
use dcsynth_core::profiling::ProfilerConfig;
use dcsynth_core::report::GroupKey;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::ConfigError;

pub const CONFIG_VERSION: u32 = 1;

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}
fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}
fn default_resamples() -> usize {
    dcsynth_core::report::DEFAULT_RESAMPLES
}
fn default_levels() -> Vec<f64> {
    vec![0.0]
}
fn default_group_by() -> Vec<GroupKey> {
    vec![
        GroupKey::Generator,
        GroupKey::Preprocessing,
        GroupKey::Postprocessing,
    ]
}
fn default_sweep_group_by() -> Vec<GroupKey> {
    let mut keys = vec![GroupKey::Noise];
    keys.extend(default_group_by());
    keys
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

/// Settings shared by every run of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDefaults {
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_roster")]
    pub roster: Vec<ClassifierKind>,
    #[serde(default = "default_synth_ratio")]
    pub synth_size_ratio: f64,
    #[serde(default)]
    pub include_real_postprocess_condition: bool,
    #[serde(default = "default_importance_model")]
    pub importance_model: ClassifierKind,
}

impl Default for RunDefaults {
    fn default() -> Self {
        Self {
            train_fraction: default_train_fraction(),
            roster: default_roster(),
            synth_size_ratio: default_synth_ratio(),
            include_real_postprocess_condition: false,
            importance_model: default_importance_model(),
        }
    }
}

/// Grid experiment: datasets × noise levels × profilers × generators ×
/// strategies × seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; `--jobs` takes precedence.
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    #[serde(default = "default_group_by")]
    pub group_by: Vec<GroupKey>,
    #[serde(default = "default_levels")]
    pub noise_levels_percent: Vec<f64>,
    #[serde(default)]
    pub datasets: Vec<DatasetSource>,
    #[serde(default)]
    pub profilers: Vec<ProfilerConfig>,
    #[serde(default)]
    pub generators: Vec<GeneratorSpec>,
    /// Defaults to every strategy valid for each profiler.
    #[serde(default)]
    pub strategies: Option<Vec<Strategy>>,
    #[serde(default)]
    pub run: RunDefaults,
}

impl ExperimentConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        check_version(self.version)?;
        if self.resamples < 100 {
            return Err(config_err(format!(
                "resamples must be at least 100, got {}",
                self.resamples
            )));
        }
        if self.jobs == Some(0) {
            return Err(config_err("jobs must be at least 1".into()));
        }
        for run in self.grid() {
            run.validate()
                .with_context(|| format!("grid cell {}", run.result_file_name()))?;
        }
        let mut names: Vec<String> = self.grid().iter().map(|c| c.result_file_name()).collect();
        let total = names.len();
        names.sort();
        names.dedup();
        if names.len() != total {
            return Err(config_err(
                "grid contains duplicate cells (repeated seeds, datasets or axis entries)".into(),
            ));
        }
        Ok(())
    }

    /// Cartesian grid ordered dataset, noise, profiler, generator, strategy, seed.
    pub fn grid(&self) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for dataset in &self.datasets {
            for &level in &self.noise_levels_percent {
                for profiler in &self.profilers {
                    let strategies = self
                        .strategies
                        .clone()
                        .unwrap_or_else(|| Strategy::all(profiler.method.is_three_way()));
                    for generator in &self.generators {
                        for s in &strategies {
                            for &seed in &self.seeds {
                                let mut c = RunConfig::new(
                                    dataset.clone(),
                                    profiler.clone(),
                                    generator.clone(),
                                    seed,
                                );
                                c.noise = level / 100.0;
                                c.preprocessing = s.preprocessing;
                                c.postprocessing = s.postprocessing;
                                c.train_fraction = self.run.train_fraction;
                                c.roster = self.run.roster.clone();
                                c.synth_size_ratio = self.run.synth_size_ratio;
                                c.include_real_postprocess_condition =
                                    self.run.include_real_postprocess_condition;
                                c.importance_model = self.run.importance_model;
                                out.push(c);
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// `[sweep]` wraps a noise sweep; `version` and `output_dir` sit alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSweepDocument {
    pub version: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    #[serde(default = "default_sweep_group_by")]
    pub group_by: Vec<GroupKey>,
    pub sweep: NoiseSweepConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdBenchDocument {
    pub version: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub bench: ThresholdBenchConfig,
}

impl Default for ThresholdBenchDocument {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            output_dir: default_output_dir(),
            bench: ThresholdBenchConfig::default(),
        }
    }
}

pub fn config_err(msg: String) -> anyhow::Error {
    anyhow::Error::new(ConfigError(msg))
}

pub fn check_version(version: u32) -> anyhow::Result<()> {
    if version != CONFIG_VERSION {
        return Err(config_err(format!(
            "unsupported config version {version} (expected {CONFIG_VERSION})"
        )));
    }
    Ok(())
}

/// Reads and parses a TOML document. Parse errors carry line and column.
pub fn load<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
version = 1
seeds = [1, 2]
noise_levels_percent = [0, 10]

[[datasets]]
type = "simulated"
n_features = 3
n_samples = 100

[[profilers]]
method = "cleanlab"

[[profilers]]
method = "dataiq"

[[generators]]
kind = "marginal_hist"

[[generators]]
kind = "gmm"
"#;

    #[test]
    fn grid_is_cartesian() {
        let c: ExperimentConfig = toml::from_str(SMALL).unwrap();
        c.validate().unwrap();
        // cleanlab has 4 strategies, dataiq 6
        assert_eq!(c.grid().len(), 2 * (4 + 6) * 2 * 2);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_location() {
        let text = format!("{SMALL}\nbogus = 3\n");
        let err = toml::from_str::<ExperimentConfig>(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn wrong_version_is_a_config_error() {
        let text = SMALL.replace("version = 1", "version = 7");
        let c: ExperimentConfig = toml::from_str(&text).unwrap();
        let err = c.validate().unwrap_err();
        assert!(err.is::<ConfigError>());
    }

    #[test]
    fn duplicate_seeds_are_rejected() {
        let text = SMALL.replace("seeds = [1, 2]", "seeds = [1, 1]");
        let c: ExperimentConfig = toml::from_str(&text).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn empty_grid_is_valid() {
        let c: ExperimentConfig = toml::from_str("version = 1").unwrap();
        c.validate().unwrap();
        assert!(c.grid().is_empty());
    }
}
