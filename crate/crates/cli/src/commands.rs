//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use anyhow::Context;
use dcsynth_core::data::{
    inject_label_noise, load_csv, simulate_dataset, write_csv, CsvOptions, KindHint,
};
use dcsynth_core::generators::{fit_segmented, GeneratorSpec, Segment, SegmentedGenerator};
use dcsynth_core::learners::ClassifierKind;
use dcsynth_core::noisebench::{
    aggregate_threshold_cells, real_reference, run_threshold_unit, threshold_units,
    write_threshold_table, RealReference, ThresholdCell,
};
use dcsynth_core::pipeline::{
    evaluate_fidelity, evaluate_utility, preprocess, run_condition, Preprocessing, RunConfig,
    RunResult, TestSet,
};
use dcsynth_core::profiling::{profile_dataset, write_assignment_csv, ProfilerConfig};
use dcsynth_core::report::{
    aggregate, delta_keys, export_rows, pct_change_vs_baseline, ExportFormat, GroupKey, TableRow,
};
use dcsynth_core::rng::derive_seed;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    CsvInput, EvaluateArgs, GenerateArgs, NoiseSweepArgs, ProfileArgs, ProfilerArgs, ReportArgs,
    RunArgs, SeedList, SimulateArgs, ThresholdBenchArgs,
};
use crate::experiment::{
    check_version, config_err, load, ExperimentConfig, NoiseSweepDocument, ThresholdBenchDocument,
};
use crate::output::{existing_result, find_results, write_atomic, write_atomic_with};

static CLI_JOBS: OnceLock<Option<usize>> = OnceLock::new();

pub fn set_cli_jobs(jobs: Option<usize>) {
    let _ = CLI_JOBS.set(jobs);
}

/// Worker pool sized by `--jobs`, else the config, else the CPU count.
fn pool(config_jobs: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    let jobs = CLI_JOBS
        .get()
        .copied()
        .flatten()
        .or(config_jobs)
        .unwrap_or(0);
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

fn csv_options(csv: &CsvInput) -> CsvOptions {
    csv.categorical
        .iter()
        .fold(CsvOptions::new(&csv.label), |o, c| {
            o.hint(c, KindHint::Categorical)
        })
}

fn out_dir(out: Option<PathBuf>, fallback: &Path) -> PathBuf {
    out.unwrap_or_else(|| fallback.to_path_buf())
}

fn profiler_config(p: &ProfilerArgs, seed: u64) -> anyhow::Result<ProfilerConfig> {
    let mut c = ProfilerConfig::new(p.method)
        .with_threshold(p.mode, p.tau)
        .with_seed(seed);
    c.learner = p.learner;
    c.validate()?;
    Ok(c)
}

struct Timing {
    file: String,
    status: &'static str,
    seconds: Option<f64>,
}

struct GridOutcome {
    results: Vec<RunResult>,
    timings: Vec<Timing>,
    failed: usize,
}

/// Runs (or reuses) every cell, writing `<dir>/<result file>` atomically.
/// Existing successful results are reused unless `force`; failed ones rerun.
fn execute_grid(grid: &[RunConfig], dir: &Path, force: bool) -> anyhow::Result<GridOutcome> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let total = grid.len();
    let cells: Vec<anyhow::Result<(RunResult, Timing)>> = grid
        .par_iter()
        .map(|config| {
            let file = config.result_file_name();
            let path = dir.join(&file);
            if !force {
                if let Some(r) = existing_result(&path).filter(|r| r.is_ok()) {
                    log::info!("skip {file}");
                    return Ok((
                        r,
                        Timing {
                            file,
                            status: "skipped",
                            seconds: None,
                        },
                    ));
                }
            }
            let start = Instant::now();
            let result = run_condition(config);
            let seconds = result
                .wall_clock
                .unwrap_or_else(|| start.elapsed())
                .as_secs_f64();
            write_atomic(&path, format!("{}\n", result.to_json()?).as_bytes())?;
            let status = if result.is_ok() { "ok" } else { "failed" };
            if let Some(e) = &result.error {
                log::error!("{file} failed in {}: {}", e.stage, e.message);
            } else {
                log::info!("done {file} ({seconds:.1}s)");
            }
            Ok((
                result,
                Timing {
                    file,
                    status,
                    seconds: Some(seconds),
                },
            ))
        })
        .collect();
    let mut outcome = GridOutcome {
        results: Vec::with_capacity(total),
        timings: Vec::new(),
        failed: 0,
    };
    for c in cells {
        let (r, t) = c?;
        if !r.is_ok() {
            outcome.failed += 1;
        }
        outcome.results.push(r);
        outcome.timings.push(t);
    }
    Ok(outcome)
}

fn write_timings(path: &Path, timings: &[Timing]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["result_file", "status", "seconds"])?;
    for t in timings {
        let secs = t.seconds.map(|s| format!("{s:.3}")).unwrap_or_default();
        w.write_record([t.file.as_str(), t.status, secs.as_str()])?;
    }
    write_atomic(path, &w.into_inner()?)
}

/// Writes `aggregate.<ext>` and `deltas.<ext>` for the given results.
fn write_tables(
    out: &Path,
    results: &[RunResult],
    group_by: &[GroupKey],
    resamples: usize,
    seed: u64,
    format: ExportFormat,
) -> anyhow::Result<()> {
    let ext = match format {
        ExportFormat::Csv => "csv",
        ExportFormat::Json => "json",
    };
    let rows: Vec<TableRow> = aggregate(results, group_by, resamples, seed)?
        .iter()
        .map(TableRow::from)
        .collect();
    write_atomic_with(&out.join(format!("aggregate.{ext}")), |p| {
        export_rows(&rows, group_by, format, p)
    })?;
    let keys = delta_keys(group_by);
    let deltas: Vec<TableRow> = pct_change_vs_baseline(results, group_by, resamples, seed)?
        .iter()
        .map(TableRow::from)
        .collect();
    write_atomic_with(&out.join(format!("deltas.{ext}")), |p| {
        export_rows(&deltas, &keys, format, p)
    })
}

fn finish_grid(outcome: &GridOutcome) -> u8 {
    let computed = outcome
        .timings
        .iter()
        .filter(|t| t.seconds.is_some())
        .count();
    println!(
        "{} runs: {} computed, {} reused, {} failed",
        outcome.results.len(),
        computed,
        outcome.results.len() - computed,
        outcome.failed
    );
    u8::from(outcome.failed > 0)
}

pub fn run(a: RunArgs) -> anyhow::Result<u8> {
    let mut config: ExperimentConfig = load(&a.config)?;
    if let Some(SeedList(seeds)) = a.seeds {
        config.seeds = seeds;
    }
    config.validate()?;
    let out = out_dir(a.output.out, &config.output_dir);
    let grid = config.grid();
    log::info!("{} grid cells into {}", grid.len(), out.display());
    let outcome =
        pool(config.jobs)?.install(|| execute_grid(&grid, &out.join("runs"), a.output.force))?;
    write_timings(&out.join("timings.csv"), &outcome.timings)?;
    write_tables(
        &out,
        &outcome.results,
        &config.group_by,
        config.resamples,
        0,
        ExportFormat::Csv,
    )?;
    Ok(finish_grid(&outcome))
}

pub fn noise_sweep(a: NoiseSweepArgs) -> anyhow::Result<u8> {
    let mut doc: NoiseSweepDocument = load(&a.config)?;
    check_version(doc.version)?;
    if let Some(SeedList(seeds)) = a.seeds {
        doc.sweep.seeds = seeds;
    }
    doc.sweep.validate()?;
    if doc.resamples < 100 {
        return Err(config_err(format!(
            "resamples must be at least 100, got {}",
            doc.resamples
        )));
    }
    let out = out_dir(a.output.out, &doc.output_dir);
    let sweep = &doc.sweep;
    let force = a.output.force;
    let pool = pool(None)?;
    let outcome = pool.install(|| execute_grid(&sweep.grid(), &out.join("runs"), force))?;
    write_timings(&out.join("timings.csv"), &outcome.timings)?;
    write_tables(
        &out,
        &outcome.results,
        &doc.group_by,
        doc.resamples,
        0,
        ExportFormat::Csv,
    )?;

    if sweep.include_reference {
        let dir = out.join("reference");
        let refs: Vec<anyhow::Result<RealReference>> = pool.install(|| {
            sweep
                .reference_grid()
                .par_iter()
                .map(|(noise, seed, c)| {
                    let path = dir.join(format!("noise{noise}_seed{seed}.json"));
                    if !force {
                        if let Some(r) = std::fs::read_to_string(&path)
                            .ok()
                            .and_then(|t| serde_json::from_str::<RealReference>(&t).ok())
                        {
                            return Ok(r);
                        }
                    }
                    let r = real_reference(*noise, *seed, c);
                    write_atomic(&path, serde_json::to_string_pretty(&r)?.as_bytes())?;
                    Ok(r)
                })
                .collect()
        });
        let refs = refs.into_iter().collect::<anyhow::Result<Vec<_>>>()?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["noise", "seed", "model", "auroc"])?;
        for r in &refs {
            for m in &r.models {
                let auroc = m.auroc.map(|v| v.to_string()).unwrap_or_default();
                w.write_record([
                    r.noise.to_string(),
                    r.seed.to_string(),
                    m.kind.to_string(),
                    auroc,
                ])?;
            }
        }
        write_atomic(&out.join("reference.csv"), &w.into_inner()?)?;
    }
    Ok(finish_grid(&outcome))
}

pub fn threshold_bench(a: ThresholdBenchArgs) -> anyhow::Result<u8> {
    let mut doc: ThresholdBenchDocument = match &a.config {
        Some(p) => load(p)?,
        None => ThresholdBenchDocument::default(),
    };
    check_version(doc.version)?;
    if let Some(SeedList(seeds)) = a.seeds {
        doc.bench.seeds = seeds;
    }
    if a.small_shapes {
        doc.bench = doc.bench.with_small_shapes();
    }
    let bench = &doc.bench;
    bench.validate()?;
    let out = out_dir(a.output.out, &doc.output_dir);
    let dir = out.join("units");
    std::fs::create_dir_all(&dir)?;
    let units = threshold_units(bench);
    let per_unit: Vec<(String, anyhow::Result<Vec<ThresholdCell>>)> = pool(None)?.install(|| {
        units
            .par_iter()
            .map(|u| {
                let path = dir.join(format!("{}.json", u.label()));
                if !a.output.force {
                    if let Some(cells) = std::fs::read_to_string(&path)
                        .ok()
                        .and_then(|t| serde_json::from_str::<Vec<ThresholdCell>>(&t).ok())
                    {
                        return (u.label(), Ok(cells));
                    }
                }
                let r = run_threshold_unit(bench, u)
                    .map_err(anyhow::Error::from)
                    .and_then(|cells| {
                        write_atomic(&path, serde_json::to_string_pretty(&cells)?.as_bytes())?;
                        Ok(cells)
                    });
                (u.label(), r)
            })
            .collect()
    });
    let mut cells = Vec::new();
    let mut failed = 0;
    for (label, r) in per_unit {
        match r {
            Ok(c) => cells.extend(c),
            Err(e) => {
                failed += 1;
                eprintln!("unit {label} failed: {e:#}");
            }
        }
    }
    let rows = aggregate_threshold_cells(&cells);
    write_atomic_with(&out.join("threshold_table.csv"), |p| {
        write_threshold_table(&rows, p)
    })?;
    println!(
        "{} units ({} failed), {} table rows -> {}",
        units.len(),
        failed,
        rows.len(),
        out.join("threshold_table.csv").display()
    );
    Ok(u8::from(failed > 0))
}

pub fn profile(a: ProfileArgs) -> anyhow::Result<u8> {
    let config = profiler_config(&a.profiler, a.seed)?;
    let data = load_csv(&a.data, &csv_options(&a.csv))?;
    let profiled = profile_dataset(&data, &config)?;
    let path = out_dir(a.out, Path::new(".")).join("profile.csv");
    write_atomic_with(&path, |p| {
        write_assignment_csv(&profiled.assignment, &profiled.scores, p)
    })?;
    let counts = profiled.assignment.counts();
    println!(
        "{}: easy {} ambiguous {} hard {} (n = {}) -> {}",
        config.label(),
        counts.easy,
        counts.ambiguous,
        counts.hard,
        profiled.assignment.len(),
        path.display()
    );
    Ok(0)
}

pub fn generate(a: GenerateArgs) -> anyhow::Result<u8> {
    let generator = match (&a.model, &a.data) {
        (Some(model), _) => SegmentedGenerator::load(model)?,
        (None, Some(data)) => {
            let data = load_csv(data, &csv_options(&a.csv))?;
            let spec = GeneratorSpec::new(a.generator, derive_seed(a.seed, "generator"));
            spec.validate()?;
            let segments = if a.preprocessing == Preprocessing::Baseline {
                vec![(Segment::All, data)]
            } else {
                let config = profiler_config(&a.profiler, derive_seed(a.seed, "profiler"))?;
                let profiled = profile_dataset(&data, &config)?;
                preprocess(&data, &profiled.assignment, a.preprocessing)?
            };
            fit_segmented(&spec, segments)?
        }
        (None, None) => return Err(config_err("pass a training CSV or --model".into())),
    };
    if let Some(path) = &a.save_model {
        write_atomic(path, generator.to_json()?.as_bytes())?;
    }
    let n =
        a.n.unwrap_or_else(|| generator.segments().iter().map(|s| s.size).sum());
    let synth = generator.sample(n, derive_seed(a.seed, "sample"));
    let path = out_dir(a.out, Path::new(".")).join("synthetic.csv");
    write_atomic_with(&path, |p| write_csv(&synth, p, &a.csv.label))?;
    let segments: Vec<String> = generator
        .segments()
        .iter()
        .zip(generator.counts_for(n))
        .map(|(s, c)| format!("{} {c}", s.tag.name()))
        .collect();
    println!("{n} rows ({}) -> {}", segments.join(", "), path.display());
    Ok(0)
}

#[derive(Serialize)]
struct Evaluation {
    n_real: usize,
    n_synth: usize,
    fidelity: dcsynth_core::pipeline::FidelityResult,
    utility: Option<dcsynth_core::pipeline::UtilityResult>,
}

pub fn evaluate(a: EvaluateArgs) -> anyhow::Result<u8> {
    let opts = csv_options(&a.csv);
    let real = load_csv(&a.real, &opts)?;
    let synth = load_csv(&a.synth, &opts)?;
    real.require_same_schema(&synth)?;
    let fidelity = evaluate_fidelity(&real, &synth, derive_seed(a.seed, "fidelity"));
    let utility = match &a.test {
        Some(p) => {
            let test = load_csv(p, &opts)?;
            real.require_same_schema(&test)?;
            Some(evaluate_utility(
                &real,
                &synth,
                &TestSet::new(test),
                &ClassifierKind::ALL,
                ClassifierKind::RandomForest,
                derive_seed(a.seed, "roster"),
            ))
        }
        None => None,
    };
    let report = Evaluation {
        n_real: real.n(),
        n_synth: synth.n(),
        fidelity,
        utility,
    };
    let json = serde_json::to_string_pretty(&report)?;
    match a.out {
        Some(dir) => {
            let path = dir.join("evaluation.json");
            write_atomic(&path, format!("{json}\n").as_bytes())?;
            println!("{}", path.display());
        }
        None => println!("{json}"),
    }
    Ok(0)
}

pub fn simulate(a: SimulateArgs) -> anyhow::Result<u8> {
    if !(0.0..=1.0).contains(&a.noise) {
        return Err(config_err(format!("--noise {} outside [0, 1]", a.noise)));
    }
    let clean = simulate_dataset(a.features, a.samples, a.seed)?;
    let out = out_dir(a.out, Path::new("."));
    let data = if a.noise > 0.0 {
        let (noisy, injection) = inject_label_noise(&clean, a.noise, derive_seed(a.seed, "noise"))?;
        let ids: Vec<u64> = injection.flipped_ids.iter().copied().collect();
        write_atomic(
            &out.join("flipped_ids.json"),
            serde_json::to_string(&ids)?.as_bytes(),
        )?;
        noisy
    } else {
        clean
    };
    let path = out.join("simulated.csv");
    write_atomic_with(&path, |p| write_csv(&data, p, "y"))?;
    let [n0, n1] = data.class_counts();
    println!(
        "{} rows x {} features (class 0: {n0}, class 1: {n1}) -> {}",
        data.n(),
        data.d(),
        path.display()
    );
    Ok(0)
}

pub fn report(a: ReportArgs) -> anyhow::Result<u8> {
    if a.resamples < 100 {
        return Err(config_err(format!(
            "--resamples must be at least 100, got {}",
            a.resamples
        )));
    }
    let found = find_results(&a.results)?;
    let results: Vec<RunResult> = found.into_iter().map(|(_, r)| r).collect();
    let out = out_dir(a.out, &a.results);
    write_tables(&out, &results, &a.group_by, a.resamples, a.seed, a.format)?;
    println!("{} results -> {}", results.len(), out.display());
    Ok(0)
}
