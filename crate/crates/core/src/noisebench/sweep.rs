use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DEFAULT_NOISE_LEVELS;
use crate::error::{Error, Result};
use crate::generators::GeneratorKind;
use crate::pipeline::{
    evaluate_real_reference, run_condition, ModelAuroc, Postprocessing, Preprocessing, RunConfig,
    RunResult,
};
use crate::rng::derive_seed_indexed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Strategy {
    pub preprocessing: Preprocessing,
    pub postprocessing: Postprocessing,
}

impl Strategy {
    pub const BASELINE: Strategy = Strategy {
        preprocessing: Preprocessing::Baseline,
        postprocessing: Postprocessing::Baseline,
    };

    pub fn new(preprocessing: Preprocessing, postprocessing: Postprocessing) -> Self {
        Self {
            preprocessing,
            postprocessing,
        }
    }

    /// Every valid combination for a two-way or three-way profiler.
    pub fn all(three_way: bool) -> Vec<Strategy> {
        Preprocessing::ALL
            .into_iter()
            .filter(|p| three_way || *p != Preprocessing::EasyAmbiguousHard)
            .flat_map(|p| {
                Postprocessing::ALL
                    .into_iter()
                    .map(move |q| Strategy::new(p, q))
            })
            .collect()
    }
}

fn default_levels() -> Vec<f64> {
    DEFAULT_NOISE_LEVELS.iter().map(|p| p * 100.0).collect()
}
fn default_generators() -> Vec<GeneratorKind> {
    GeneratorKind::ALL.to_vec()
}
fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}
fn default_true() -> bool {
    true
}

/// Grid of label-noise levels, generators, strategies and replicate seeds
/// around a template run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSweepConfig {
    pub base: RunConfig,
    /// Noise levels in percent.
    #[serde(default = "default_levels")]
    pub noise_levels_percent: Vec<f64>,
    #[serde(default = "default_generators")]
    pub generators: Vec<GeneratorKind>,
    /// Defaults to every strategy valid for the base profiler.
    #[serde(default)]
    pub strategies: Option<Vec<Strategy>>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Also score the roster trained on the noisy real data.
    #[serde(default = "default_true")]
    pub include_reference: bool,
}

/// Roster scores on the real (noisy) training data for one level and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealReference {
    pub noise: f64,
    pub seed: u64,
    pub models: Vec<ModelAuroc>,
    pub mean_auroc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweepOutput {
    pub runs: Vec<RunResult>,
    pub reference: Vec<RealReference>,
}

impl NoiseSweepConfig {
    pub fn new(base: RunConfig) -> Self {
        Self {
            base,
            noise_levels_percent: default_levels(),
            generators: default_generators(),
            strategies: None,
            seeds: default_seeds(),
            include_reference: true,
        }
    }

    pub fn strategies(&self) -> Vec<Strategy> {
        self.strategies
            .clone()
            .unwrap_or_else(|| Strategy::all(self.base.profiler.method.is_three_way()))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self
            .noise_levels_percent
            .iter()
            .find(|p| !(0.0..=100.0).contains(*p))
        {
            return Err(Error::InvalidConfig(format!(
                "noise level {p}% outside [0, 100]"
            )));
        }
        self.base.validate()?;
        for c in self.grid() {
            c.validate()?;
        }
        Ok(())
    }

    /// Seed of replicate `seed`; shared by every level, generator and strategy.
    pub fn run_seed(&self, seed: u64) -> u64 {
        derive_seed_indexed(self.base.seed, "replicate", seed)
    }

    fn level_config(&self, level: f64, seed: u64) -> RunConfig {
        let mut c = self.base.clone();
        c.noise = level / 100.0;
        c.seed = self.run_seed(seed);
        c
    }

    /// Run configurations ordered by level, generator, strategy, seed.
    pub fn grid(&self) -> Vec<RunConfig> {
        let strategies = self.strategies();
        let mut out = Vec::new();
        for &level in &self.noise_levels_percent {
            for &g in &self.generators {
                for s in &strategies {
                    for &seed in &self.seeds {
                        let mut c = self.level_config(level, seed);
                        c.generator.kind = g;
                        c.preprocessing = s.preprocessing;
                        c.postprocessing = s.postprocessing;
                        out.push(c);
                    }
                }
            }
        }
        out
    }

    /// One configuration per (level, seed) for the real-data reference.
    pub fn reference_grid(&self) -> Vec<(f64, u64, RunConfig)> {
        let mut out = Vec::new();
        for &level in &self.noise_levels_percent {
            for &seed in &self.seeds {
                out.push((level / 100.0, seed, self.level_config(level, seed)));
            }
        }
        out
    }
}

pub fn real_reference(noise: f64, seed: u64, config: &RunConfig) -> RealReference {
    let models = evaluate_real_reference(config).unwrap_or_else(|e| {
        log::warn!("real reference at noise {noise}, seed {seed} failed: {e}");
        Vec::new()
    });
    let scores: Vec<f64> = models.iter().filter_map(|m| m.auroc).collect();
    RealReference {
        noise,
        seed,
        mean_auroc: (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64),
        models,
    }
}

/// Runs the whole grid in parallel. Failed runs are kept as failed results.
pub fn run_noise_sweep(config: &NoiseSweepConfig) -> Result<NoiseSweepOutput> {
    config.validate()?;
    let runs = config.grid().par_iter().map(run_condition).collect();
    let reference = if config.include_reference {
        config
            .reference_grid()
            .par_iter()
            .map(|(noise, seed, c)| real_reference(*noise, *seed, c))
            .collect()
    } else {
        Vec::new()
    };
    Ok(NoiseSweepOutput { runs, reference })
}
