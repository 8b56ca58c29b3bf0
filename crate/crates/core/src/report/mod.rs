//! Aggregation of run results into bootstrapped summaries and paired percent
//! changes against the no-processing baseline.

mod export;

pub use export::{export_rows, format_sig6, read_csv_rows, ExportFormat, TableRow};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{bootstrap_ci, BootstrapSummary};
use crate::pipeline::{Postprocessing, Preprocessing, RunResult};
use crate::rng::derive_seed;

pub const DEFAULT_RESAMPLES: usize = 1000;

/// Metrics extracted from every run, in report order.
pub const METRICS: [&str; 7] = [
    "auroc",
    "real_auroc",
    "model_selection",
    "feature_selection",
    "inverse_kl",
    "mmd",
    "wasserstein",
];

/// Value of a named metric in a run; `None` when the run failed or the metric
/// was recorded missing.
pub fn metric_value(run: &RunResult, metric: &str) -> Option<f64> {
    let u = run.utility.as_ref();
    let f = run.fidelity.as_ref();
    match metric {
        "auroc" => u?.mean_synth_auroc(),
        "real_auroc" => u?.mean_real_auroc(),
        "model_selection" => u?.model_selection_rho,
        "feature_selection" => u?.feature_selection_rho,
        "inverse_kl" => f?.inverse_kl,
        "mmd" => f?.mmd,
        "wasserstein" => f?.wasserstein,
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    Dataset,
    Profiler,
    Generator,
    Preprocessing,
    Postprocessing,
    Noise,
    Seed,
}

impl GroupKey {
    pub const ALL: [GroupKey; 7] = [
        GroupKey::Dataset,
        GroupKey::Profiler,
        GroupKey::Generator,
        GroupKey::Preprocessing,
        GroupKey::Postprocessing,
        GroupKey::Noise,
        GroupKey::Seed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GroupKey::Dataset => "dataset",
            GroupKey::Profiler => "profiler",
            GroupKey::Generator => "generator",
            GroupKey::Preprocessing => "preprocessing",
            GroupKey::Postprocessing => "postprocessing",
            GroupKey::Noise => "noise",
            GroupKey::Seed => "seed",
        }
    }

    pub fn value(self, run: &RunResult) -> String {
        let c = &run.config;
        match self {
            GroupKey::Dataset => c.dataset.name(),
            GroupKey::Profiler => c.profiler.label(),
            GroupKey::Generator => c.generator.kind.to_string(),
            GroupKey::Preprocessing => c.preprocessing.to_string(),
            GroupKey::Postprocessing => c.postprocessing.to_string(),
            GroupKey::Noise => c.noise.to_string(),
            GroupKey::Seed => c.seed.to_string(),
        }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GroupKey::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown group key {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    /// Values of the grouping keys, in grouping order.
    pub group: Vec<String>,
    pub metric: String,
    /// `None` when every value in the group was missing.
    pub summary: Option<BootstrapSummary>,
    pub n: usize,
    pub missing: usize,
}

/// Runs in a canonical order so results do not depend on input order.
fn canonical(results: &[RunResult]) -> Vec<&RunResult> {
    let mut v: Vec<&RunResult> = results.iter().collect();
    v.sort_by_cached_key(|r| (r.config.result_file_name(), r.config.seed));
    v
}

fn group_runs<'a>(
    runs: &[&'a RunResult],
    group_by: &[GroupKey],
) -> BTreeMap<Vec<String>, Vec<&'a RunResult>> {
    let mut groups: BTreeMap<Vec<String>, Vec<&RunResult>> = BTreeMap::new();
    for r in runs {
        let key = group_by.iter().map(|k| k.value(r)).collect();
        groups.entry(key).or_default().push(r);
    }
    groups
}

fn summary_seed(seed: u64, group: &[String], metric: &str) -> u64 {
    derive_seed(seed, &format!("{}|{metric}", group.join("|")))
}

/// Bootstrapped mean and 95% interval per group and metric. Missing values
/// are excluded and counted.
pub fn aggregate(
    results: &[RunResult],
    group_by: &[GroupKey],
    resamples: usize,
    seed: u64,
) -> Result<Vec<AggregateRow>> {
    if resamples < 100 {
        return Err(Error::InvalidInput(format!(
            "need at least 100 resamples, got {resamples}"
        )));
    }
    // (group key, metric, per-run values)
    type Cell<'a> = (Vec<String>, &'a str, Vec<Option<f64>>);
    let runs = canonical(results);
    let groups = group_runs(&runs, group_by);
    let cells: Vec<Cell> = groups
        .iter()
        .flat_map(|(key, rs)| {
            METRICS.iter().map(move |m| {
                (
                    key.clone(),
                    *m,
                    rs.iter().map(|r| metric_value(r, m)).collect(),
                )
            })
        })
        .collect();
    cells
        .into_par_iter()
        .map(|(group, metric, values)| {
            let present: Vec<f64> = values.iter().flatten().copied().collect();
            let summary = if present.is_empty() {
                None
            } else {
                Some(bootstrap_ci(
                    &present,
                    resamples,
                    summary_seed(seed, &group, metric),
                )?)
            };
            Ok(AggregateRow {
                metric: metric.to_string(),
                summary,
                n: present.len(),
                missing: values.len() - present.len(),
                group,
            })
        })
        .collect()
}

/// One matched comparison behind a percent change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaPair {
    pub dataset: String,
    pub seed: u64,
    pub generator: String,
    pub profiler: String,
    pub value: f64,
    pub baseline: f64,
    pub pct_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    /// Values of the grouping keys, then preprocessing and postprocessing.
    pub group: Vec<String>,
    pub metric: String,
    pub summary: Option<BootstrapSummary>,
    pub n: usize,
    /// Cells without a matching baseline value (or with a zero baseline).
    pub unmatched: usize,
    pub pairs: Vec<DeltaPair>,
}

fn is_baseline(r: &RunResult) -> bool {
    r.config.preprocessing == Preprocessing::Baseline
        && r.config.postprocessing == Postprocessing::Baseline
}

fn pair_key(r: &RunResult) -> (String, u64, String, String) {
    (
        r.config.dataset_label(),
        r.config.seed,
        r.config.generator.kind.to_string(),
        r.config.profiler.label(),
    )
}

/// Percent change `100 (x - x_base) / x_base` against the baseline run with
/// the same dataset, seed, generator and profiler, summarized per group.
/// Positive means larger, so an improvement for AUROC and rank agreement.
pub fn pct_change_vs_baseline(
    results: &[RunResult],
    group_by: &[GroupKey],
    resamples: usize,
    seed: u64,
) -> Result<Vec<DeltaRow>> {
    if resamples < 100 {
        return Err(Error::InvalidInput(format!(
            "need at least 100 resamples, got {resamples}"
        )));
    }
    let runs = canonical(results);
    let baselines: BTreeMap<_, &RunResult> = runs
        .iter()
        .filter(|r| is_baseline(r))
        .map(|r| (pair_key(r), *r))
        .collect();
    let mut keys: Vec<GroupKey> = group_by
        .iter()
        .copied()
        .filter(|k| !matches!(k, GroupKey::Preprocessing | GroupKey::Postprocessing))
        .collect();
    keys.extend([GroupKey::Preprocessing, GroupKey::Postprocessing]);
    let treated: Vec<&RunResult> = runs.iter().copied().filter(|r| !is_baseline(r)).collect();
    let groups = group_runs(&treated, &keys);
    let mut rows = Vec::new();
    for (group, rs) in &groups {
        for metric in METRICS {
            let mut pairs = Vec::new();
            let mut unmatched = 0;
            for r in rs {
                let base = baselines
                    .get(&pair_key(r))
                    .and_then(|b| metric_value(b, metric));
                match (metric_value(r, metric), base) {
                    (Some(x), Some(xb)) if xb != 0.0 => {
                        let (dataset, s, generator, profiler) = pair_key(r);
                        pairs.push(DeltaPair {
                            dataset,
                            seed: s,
                            generator,
                            profiler,
                            value: x,
                            baseline: xb,
                            pct_change: 100.0 * (x - xb) / xb,
                        });
                    }
                    _ => unmatched += 1,
                }
            }
            let deltas: Vec<f64> = pairs.iter().map(|p| p.pct_change).collect();
            let summary = if deltas.is_empty() {
                None
            } else {
                Some(bootstrap_ci(
                    &deltas,
                    resamples,
                    summary_seed(seed, group, metric),
                )?)
            };
            rows.push(DeltaRow {
                group: group.clone(),
                metric: metric.to_string(),
                summary,
                n: deltas.len(),
                unmatched,
                pairs,
            });
        }
    }
    Ok(rows)
}

/// Column names of a delta table for `group_by`.
pub fn delta_keys(group_by: &[GroupKey]) -> Vec<GroupKey> {
    let mut keys: Vec<GroupKey> = group_by
        .iter()
        .copied()
        .filter(|k| !matches!(k, GroupKey::Preprocessing | GroupKey::Postprocessing))
        .collect();
    keys.extend([GroupKey::Preprocessing, GroupKey::Postprocessing]);
    keys
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{GeneratorKind, GeneratorSpec};
    use crate::learners::ClassifierKind;
    use crate::pipeline::{
        DatasetSource, FidelityResult, ModelUtility, RunConfig, RunStatus, UtilityResult,
    };
    use crate::profiling::{ProfileMethod, ProfilerConfig};

    pub(crate) fn fake_run(
        seed: u64,
        pre: Preprocessing,
        post: Postprocessing,
        auroc: f64,
    ) -> RunResult {
        let config = RunConfig::new(
            DatasetSource::simulated(2, 10),
            ProfilerConfig::new(ProfileMethod::Cleanlab),
            GeneratorSpec::new(GeneratorKind::Gmm, 0),
            seed,
        )
        .with_strategy(pre, post);
        let json = serde_json::json!({
            "config": config,
            "dataset": "sim-d2-n10",
            "status": RunStatus::Ok,
            "error": null, "n_train": 8, "n_test": 2, "noise": null, "train_profile": null,
            "segments": [], "n_synth": 8, "synth_profile": null, "n_synth_post": 8,
            "postprocess_scorer": null,
            "utility": UtilityResult {
                models: vec![ModelUtility { kind: ClassifierKind::Knn, real_auroc: Some(0.9), synth_auroc: Some(auroc) }],
                model_selection_rho: None,
                feature_selection_rho: Some(0.5),
                importance_model: ClassifierKind::RandomForest,
                missing: vec![],
            },
            "fidelity": FidelityResult { inverse_kl: Some(0.9), mmd: Some(0.01), wasserstein: Some(0.1), missing: vec![] },
            "real_postprocessed": null, "test_access_log": [], "warnings": []
        });
        serde_json::from_value(json).unwrap()
    }

    #[test]
    fn single_run_groups_are_degenerate() {
        let runs = vec![fake_run(
            1,
            Preprocessing::Baseline,
            Postprocessing::Baseline,
            0.8,
        )];
        let rows = aggregate(&runs, &[GroupKey::Generator], 200, 0).unwrap();
        assert_eq!(rows.len(), METRICS.len());
        let auroc = rows.iter().find(|r| r.metric == "auroc").unwrap();
        let s = auroc.summary.unwrap();
        assert_eq!((s.mean, s.ci_low, s.ci_high), (0.8, 0.8, 0.8));
        let ms = rows.iter().find(|r| r.metric == "model_selection").unwrap();
        assert!(ms.summary.is_none());
        assert_eq!(ms.missing, 1);
    }

    #[test]
    fn aggregation_ignores_input_order() {
        let mut runs: Vec<RunResult> = (0..6)
            .map(|s| {
                fake_run(
                    s,
                    Preprocessing::Baseline,
                    Postprocessing::Baseline,
                    0.5 + s as f64 / 20.0,
                )
            })
            .collect();
        let a = aggregate(&runs, &[], 300, 4).unwrap();
        runs.reverse();
        assert_eq!(a, aggregate(&runs, &[], 300, 4).unwrap());
        assert_eq!(a.len(), METRICS.len());
    }

    #[test]
    fn percent_change_arithmetic() {
        let mut runs = Vec::new();
        for s in 0..4 {
            let base = 0.5 + s as f64 / 10.0;
            runs.push(fake_run(
                s,
                Preprocessing::Baseline,
                Postprocessing::Baseline,
                base,
            ));
            runs.push(fake_run(
                s,
                Preprocessing::EasyHard,
                Postprocessing::NoHard,
                base * 1.1,
            ));
            runs.push(fake_run(
                s,
                Preprocessing::EasyHard,
                Postprocessing::Baseline,
                base,
            ));
        }
        runs.push(fake_run(
            99,
            Preprocessing::EasyHard,
            Postprocessing::Baseline,
            0.7,
        ));
        let rows = pct_change_vs_baseline(&runs, &[GroupKey::Generator], 200, 0).unwrap();
        let find = |post: &str| {
            rows.iter()
                .find(|r| r.metric == "auroc" && r.group[2] == post)
                .unwrap()
        };
        let up = find("no_hard");
        assert!((up.summary.unwrap().mean - 10.0).abs() < 1e-9);
        assert_eq!(up.n, 4);
        let same = find("baseline");
        let s = same.summary.unwrap();
        assert_eq!((s.mean, s.ci_low, s.ci_high), (0.0, 0.0, 0.0));
        assert_eq!(same.unmatched, 1);
        for p in &up.pairs {
            assert_eq!(p.generator, "gmm");
        }
        assert!(rows
            .iter()
            .all(|r| r.group[1] != "baseline" || r.group[2] != "baseline"));
    }
}
