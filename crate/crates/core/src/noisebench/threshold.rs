use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DEFAULT_NOISE_LEVELS;
use crate::data::{inject_label_noise, simulate_dataset, Dataset};
use crate::error::{Error, Result};
use crate::learners::{out_of_fold_proba, train_with_checkpoints, ClassifierKind, ClassifierSpec};
use crate::profiling::{
    assign_profiles, confident_learning_scores, detection_prf, training_dynamics_scores, Prf,
    ProfileMethod, ProfilerConfig, SampleScore, ThresholdMode, DEFAULT_CHECKPOINTS, DEFAULT_FOLDS,
};
use crate::report::format_sig6;
use crate::rng::{derive_seed, derive_seed_indexed};

/// Small simulated shapes `(n_features, n_samples)`. The default
/// configuration uses the same feature counts with 1000 samples.
pub const SMALL_SHAPES: [(usize, usize); 4] = [(10, 10), (10, 50), (50, 10), (50, 50)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdBenchConfig {
    pub shapes: Vec<(usize, usize)>,
    pub noise_levels: Vec<f64>,
    pub methods: Vec<ProfileMethod>,
    /// Percentile grid for the dynamics methods.
    pub percentiles: Vec<f64>,
    /// Raw value grid for every method.
    pub values: Vec<f64>,
    /// Also evaluate cleanlab's default mode.
    pub cleanlab_default: bool,
    pub seeds: Vec<u64>,
    pub learner: ClassifierKind,
    pub checkpoints: usize,
    pub folds: usize,
}

impl Default for ThresholdBenchConfig {
    fn default() -> Self {
        Self {
            shapes: vec![(10, 1000), (50, 1000)],
            noise_levels: DEFAULT_NOISE_LEVELS.to_vec(),
            methods: ProfileMethod::ALL.to_vec(),
            percentiles: vec![20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0],
            values: vec![0.1, 0.125, 0.15, 0.175, 0.2],
            cleanlab_default: true,
            seeds: (0..10).collect(),
            learner: ClassifierKind::GradientBoosting,
            checkpoints: DEFAULT_CHECKPOINTS,
            folds: DEFAULT_FOLDS,
        }
    }
}

impl ThresholdBenchConfig {
    pub fn with_small_shapes(mut self) -> Self {
        self.shapes = SMALL_SHAPES.to_vec();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| {
            Err(Error::InvalidConfig(format!(
                "threshold benchmark needs {what}"
            )))
        };
        if self.shapes.is_empty() {
            return empty("at least one shape");
        }
        if self.noise_levels.is_empty() {
            return empty("at least one noise level");
        }
        if self.methods.is_empty() {
            return empty("at least one method");
        }
        if self.seeds.is_empty() {
            return empty("at least one seed");
        }
        if self.grid().is_empty() {
            return empty("a nonempty threshold grid");
        }
        if let Some(p) = self.noise_levels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidConfig(format!(
                "noise level {p} outside [0, 1]"
            )));
        }
        for c in self.grid() {
            c.validate()?;
        }
        Ok(())
    }

    /// Every (method, mode, tau) profiler configuration on the grid.
    pub fn grid(&self) -> Vec<ProfilerConfig> {
        let mut out = Vec::new();
        for &method in &self.methods {
            let base = ProfilerConfig {
                learner: self.learner,
                checkpoints: self.checkpoints,
                folds: self.folds,
                ..ProfilerConfig::new(method)
            };
            if method.is_three_way() {
                for &p in &self.percentiles {
                    out.push(base.clone().with_threshold(ThresholdMode::Percentile, p));
                }
            }
            for &v in &self.values {
                out.push(base.clone().with_threshold(ThresholdMode::Value, v));
            }
            if method == ProfileMethod::Cleanlab && self.cleanlab_default {
                out.push(base.clone().with_threshold(ThresholdMode::Default, 0.0));
            }
        }
        out
    }
}

/// Detection result of one profiler setting on one simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCell {
    pub n_features: usize,
    pub n_samples: usize,
    pub noise: f64,
    pub seed: u64,
    pub method: ProfileMethod,
    pub mode: ThresholdMode,
    pub tau: f64,
    pub prf: Prf,
}

/// Mean and sample standard deviation over cells of one (method, mode, tau).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub method: ProfileMethod,
    pub mode: ThresholdMode,
    pub tau: f64,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub recall_mean: f64,
    pub recall_std: f64,
    pub precision_mean: f64,
    pub precision_std: f64,
    pub cells: usize,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Groups cells by (method, mode, tau) in first-seen order.
pub fn aggregate_threshold_cells(cells: &[ThresholdCell]) -> Vec<ThresholdRow> {
    let mut keys: Vec<(ProfileMethod, ThresholdMode, f64)> = Vec::new();
    for c in cells {
        let k = (c.method, c.mode, c.tau);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(method, mode, tau)| {
            let group: Vec<&Prf> = cells
                .iter()
                .filter(|c| c.method == method && c.mode == mode && c.tau == tau)
                .map(|c| &c.prf)
                .collect();
            let col = |f: fn(&Prf) -> f64| group.iter().map(|p| f(p)).collect::<Vec<_>>();
            let (f1_mean, f1_std) = mean_std(&col(|p| p.f1));
            let (recall_mean, recall_std) = mean_std(&col(|p| p.recall));
            let (precision_mean, precision_std) = mean_std(&col(|p| p.precision));
            ThresholdRow {
                method,
                mode,
                tau,
                f1_mean,
                f1_std,
                recall_mean,
                recall_std,
                precision_mean,
                precision_std,
                cells: group.len(),
            }
        })
        .collect()
}

/// Writes `method,mode,tau,f1_mean,f1_std,recall_mean,recall_std,
/// precision_mean,precision_std,cells` with 6 significant digits.
pub fn write_threshold_table(rows: &[ThresholdRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |e: csv::Error| Error::Csv(e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record([
        "method",
        "mode",
        "tau",
        "f1_mean",
        "f1_std",
        "recall_mean",
        "recall_std",
        "precision_mean",
        "precision_std",
        "cells",
    ])
    .map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![r.method.name().to_string(), r.mode.name().to_string()];
        rec.extend(
            [
                r.tau,
                r.f1_mean,
                r.f1_std,
                r.recall_mean,
                r.recall_std,
                r.precision_mean,
                r.precision_std,
            ]
            .map(format_sig6),
        );
        rec.push(r.cells.to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Scores computed once per (dataset, method family), shared by all thresholds.
fn scores_for(
    method: ProfileMethod,
    data: &Dataset,
    config: &ThresholdBenchConfig,
    seed: u64,
    dynamics: &mut Option<SampleScore>,
) -> Result<SampleScore> {
    let spec = ClassifierSpec::new(config.learner, derive_seed(seed, "profiler/learner"));
    match method {
        ProfileMethod::Cleanlab => {
            let oof = out_of_fold_proba(
                &spec,
                data,
                config.folds,
                derive_seed(seed, "profiler/folds"),
            )?;
            confident_learning_scores(&oof.proba, data.labels())
        }
        _ => {
            if dynamics.is_none() {
                let (_, trace) = train_with_checkpoints(&spec, data, config.checkpoints)?;
                *dynamics = Some(training_dynamics_scores(&trace));
            }
            Ok(dynamics.clone().expect("just computed"))
        }
    }
}

/// One simulated dataset of the benchmark: a shape, a replicate seed and a
/// noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdUnit {
    pub shape_index: usize,
    pub n_features: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub noise: f64,
}

impl ThresholdUnit {
    /// `d{d}-n{n}-noise{p}-seed{s}`, unique within a benchmark.
    pub fn label(&self) -> String {
        format!(
            "d{}-n{}-noise{}-seed{}",
            self.n_features, self.n_samples, self.noise, self.seed
        )
    }
}

/// Units ordered by shape, seed, noise level.
pub fn threshold_units(config: &ThresholdBenchConfig) -> Vec<ThresholdUnit> {
    let mut units = Vec::new();
    for (si, &(d, n)) in config.shapes.iter().enumerate() {
        for &seed in &config.seeds {
            for &noise in &config.noise_levels {
                units.push(ThresholdUnit {
                    shape_index: si,
                    n_features: d,
                    n_samples: n,
                    seed,
                    noise,
                });
            }
        }
    }
    units
}

/// Every grid cell of one unit. Each method's scores are computed once and
/// reused across its thresholds; a method whose scorer fails is skipped with
/// a warning.
pub fn run_threshold_unit(
    config: &ThresholdBenchConfig,
    unit: &ThresholdUnit,
) -> Result<Vec<ThresholdCell>> {
    let &ThresholdUnit {
        shape_index,
        n_features: d,
        n_samples: n,
        seed,
        noise: p,
    } = unit;
    let grid = config.grid();
    let data_seed = derive_seed_indexed(seed, "threshold-bench/shape", shape_index as u64);
    let clean = simulate_dataset(d, n, data_seed)?;
    let (noisy, injection) = inject_label_noise(&clean, p, derive_seed(data_seed, "noise"))?;
    let mut cells = Vec::new();
    let mut dynamics = None;
    for &method in &config.methods {
        let scores = match scores_for(method, &noisy, config, data_seed, &mut dynamics) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("{method} failed on shape ({d}, {n}) seed {seed} noise {p}: {e}");
                continue;
            }
        };
        for pc in grid.iter().filter(|c| c.method == method) {
            let assignment = assign_profiles(&scores, pc, noisy.row_ids())?;
            cells.push(ThresholdCell {
                n_features: d,
                n_samples: n,
                noise: p,
                seed,
                method,
                mode: pc.mode,
                tau: pc.tau,
                prf: detection_prf(&assignment, &injection)?,
            });
        }
    }
    Ok(cells)
}

/// Runs every unit in parallel and concatenates the cells in unit order.
pub fn run_threshold_benchmark(config: &ThresholdBenchConfig) -> Result<Vec<ThresholdCell>> {
    config.validate()?;
    let per_unit: Vec<Result<Vec<ThresholdCell>>> = threshold_units(config)
        .par_iter()
        .map(|u| run_threshold_unit(config, u))
        .collect();
    let mut out = Vec::new();
    for r in per_unit {
        out.extend(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let c = ThresholdBenchConfig::default();
        c.validate().unwrap();
        let grid = c.grid();
        // cleanlab: 5 values + default; dataiq and datamaps: 7 percentiles + 5 values
        assert_eq!(grid.len(), 6 + 12 + 12);
    }

    #[test]
    fn small_run_is_deterministic_and_zero_noise_has_zero_recall() {
        let config = ThresholdBenchConfig {
            shapes: vec![(4, 120)],
            noise_levels: vec![0.0, 0.1],
            seeds: vec![1],
            checkpoints: 5,
            ..ThresholdBenchConfig::default()
        };
        let a = run_threshold_benchmark(&config).unwrap();
        assert_eq!(a, run_threshold_benchmark(&config).unwrap());
        assert_eq!(a.len(), 2 * config.grid().len());
        for c in a.iter().filter(|c| c.noise == 0.0) {
            assert_eq!(c.prf.recall, 0.0);
        }
        let rows = aggregate_threshold_cells(&a);
        assert_eq!(rows.len(), config.grid().len());
        assert!(rows.iter().all(|r| r.cells == 2));
    }

    #[test]
    fn mean_std_is_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-12);
    }
}
