use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dcsynth(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcsynth"))
        .args(args)
        .current_dir(cwd)
        .env_remove("DCSYNTH_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_RUN: &str = r#"
version = 1
output_dir = "out"
seeds = [0]
resamples = 100

[[datasets]]
type = "simulated"
n_features = 3
n_samples = 120

[[profilers]]
method = "cleanlab"

[[generators]]
kind = "marginal_hist"

[run]
roster = ["logistic_regression", "gaussian_nb"]
"#;

/// Two well separated blobs with a deterministic jitter.
fn separable_csv(path: &Path, n: usize) {
    let mut s = String::from("a,b,y\n");
    for i in 0..n {
        let y = i % 2;
        let centre = if y == 1 { 4.0 } else { -4.0 };
        let j1 = ((i * 37) % 101) as f64 / 101.0 - 0.5;
        let j2 = ((i * 53) % 97) as f64 / 97.0 - 0.5;
        s.push_str(&format!("{},{},{y}\n", centre + j1, -centre + j2));
    }
    fs::write(path, s).unwrap();
}

#[test]
fn profile_covers_every_row_and_flags_few_on_clean_data() {
    let dir = tempfile::tempdir().unwrap();
    separable_csv(&dir.path().join("blobs.csv"), 300);
    let o = dcsynth(
        &["profile", "blobs.csv", "--mode", "default", "--out", "."],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 300);
    let hard = rows
        .iter()
        .filter(|r| r.split(',').nth(2) == Some("hard"))
        .count();
    assert!(hard as f64 <= 0.05 * 300.0, "{hard} hard rows");
    assert!(stdout(&o).contains("easy"));
}

#[test]
fn invalid_method_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    separable_csv(&dir.path().join("blobs.csv"), 20);
    let o = dcsynth(&["profile", "blobs.csv", "--method", "oracle"], dir.path());
    assert_eq!(code(&o), 2);
    let o = dcsynth(
        &[
            "profile",
            "blobs.csv",
            "--method",
            "cleanlab",
            "--mode",
            "percentile",
            "--tau",
            "40",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn run_resumes_without_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.toml"), SMALL_RUN).unwrap();
    let first = dcsynth(&["run", "--config", "exp.toml"], dir.path());
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    assert!(stdout(&first).contains("4 computed"), "{}", stdout(&first));
    let runs = dir.path().join("out/runs");
    let before: Vec<_> = fs::read_dir(&runs)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.clone(),
                fs::read(&p).unwrap(),
                fs::metadata(&p).unwrap().modified().unwrap(),
            )
        })
        .collect();
    assert_eq!(before.len(), 4);

    let second = dcsynth(&["run", "--config", "exp.toml"], dir.path());
    assert_eq!(code(&second), 0);
    assert!(
        stdout(&second).contains("0 computed, 4 reused"),
        "{}",
        stdout(&second)
    );
    for (p, bytes, modified) in &before {
        assert_eq!(&fs::read(p).unwrap(), bytes);
        assert_eq!(&fs::metadata(p).unwrap().modified().unwrap(), modified);
    }

    let forced = dcsynth(&["run", "--config", "exp.toml", "--force"], dir.path());
    assert!(stdout(&forced).contains("4 computed"));
    // runs are deterministic, so recomputed files are identical
    for (p, bytes, _) in &before {
        assert_eq!(&fs::read(p).unwrap(), bytes);
    }
    let timings = fs::read_to_string(dir.path().join("out/timings.csv")).unwrap();
    assert!(timings.starts_with("result_file,status,seconds"));
    assert_eq!(timings.lines().count(), 5);
}

#[test]
fn seed_range_matches_grid_arithmetic() {
    let dir = tempfile::tempdir().unwrap();
    let config = SMALL_RUN.replace("[run]", "[[generators]]\nkind = \"gmm\"\n\n[run]");
    fs::write(dir.path().join("exp.toml"), config).unwrap();
    let o = dcsynth(
        &[
            "run", "--config", "exp.toml", "--seeds", "1..8", "--jobs", "2",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // 1 dataset x 1 noise level x 1 profiler x 2 generators x 4 strategies x 8 seeds
    assert_eq!(
        fs::read_dir(dir.path().join("out/runs")).unwrap().count(),
        64
    );
    let agg = fs::read_to_string(dir.path().join("out/aggregate.csv")).unwrap();
    let auroc_rows: Vec<&str> = agg.lines().filter(|l| l.contains(",auroc,")).collect();
    assert_eq!(auroc_rows.len(), 8);
    assert!(auroc_rows.iter().all(|r| r.ends_with(",8,0")));
}

#[test]
fn empty_grid_writes_header_only_tables() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.toml"), "version = 1\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_dcsynth"))
        .args(["run", "--config", "empty.toml"])
        .current_dir(dir.path())
        .env("DCSYNTH_OUT", "from-env")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let agg = fs::read_to_string(dir.path().join("from-env/aggregate.csv")).unwrap();
    assert_eq!(
        agg.trim_end(),
        "generator,preprocessing,postprocessing,metric,mean,ci_low,ci_high,n,missing"
    );
    let deltas = fs::read_to_string(dir.path().join("from-env/deltas.csv")).unwrap();
    assert_eq!(deltas.lines().count(), 1);
}

#[test]
fn invalid_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.toml"),
        "version = 1\nseeds = [1]\nsed = 3\n",
    )
    .unwrap();
    let o = dcsynth(&["run", "--config", "bad.toml"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    fs::write(dir.path().join("v.toml"), "version = 2\n").unwrap();
    assert_eq!(
        code(&dcsynth(&["run", "--config", "v.toml"], dir.path())),
        2
    );

    let bad_tau = SMALL_RUN.replace("method = \"cleanlab\"", "method = \"dataiq\"\ntau = 0.6");
    fs::write(dir.path().join("tau.toml"), bad_tau).unwrap();
    assert_eq!(
        code(&dcsynth(&["run", "--config", "tau.toml"], dir.path())),
        2
    );

    let missing = dcsynth(&["run", "--config", "nope.toml"], dir.path());
    assert_eq!(code(&missing), 2);
}

#[test]
fn failed_runs_exit_with_runtime_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = SMALL_RUN.replace(
        "type = \"simulated\"\nn_features = 3\nn_samples = 120",
        "type = \"csv\"\npath = \"missing.csv\"\nlabel_column = \"y\"",
    );
    fs::write(dir.path().join("exp.toml"), config).unwrap();
    let o = dcsynth(&["run", "--config", "exp.toml"], dir.path());
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let runs: Vec<_> = fs::read_dir(dir.path().join("out/runs")).unwrap().collect();
    assert_eq!(runs.len(), 4);
    let text = fs::read_to_string(runs[0].as_ref().unwrap().path()).unwrap();
    assert!(text.contains("\"failed\""), "{text}");
}

#[test]
fn threshold_bench_has_one_row_per_threshold_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config =
        "version = 1\n[bench]\nshapes = [[4, 120]]\nnoise_levels = [0.1]\ncheckpoints = 4\n";
    fs::write(dir.path().join("tb.toml"), config).unwrap();
    let mut tables = Vec::new();
    for out in ["a", "b"] {
        let o = dcsynth(
            &[
                "threshold-bench",
                "--config",
                "tb.toml",
                "--seeds",
                "0,1",
                "--out",
                out,
            ],
            dir.path(),
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        tables.push(fs::read_to_string(dir.path().join(out).join("threshold_table.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
    let rows: Vec<&str> = tables[0].lines().skip(1).collect();
    // cleanlab: 5 values + default; dataiq and datamaps: 7 percentiles + 5 values
    assert_eq!(rows.len(), 6 + 12 + 12);
    let mut keys: Vec<String> = rows
        .iter()
        .map(|r| r.splitn(4, ',').take(3).collect::<Vec<_>>().join(","))
        .collect();
    keys.sort();
    keys.dedup();
    assert_eq!(keys.len(), rows.len());
    assert!(rows.iter().all(|r| r.ends_with(",2")));
    assert_eq!(fs::read_dir(dir.path().join("a/units")).unwrap().count(), 2);
}

#[test]
fn noise_sweep_defaults_to_six_levels() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"
version = 1
resamples = 100
[sweep]
generators = ["marginal_hist"]
seeds = [0]
strategies = [
  { preprocessing = "baseline", postprocessing = "baseline" },
]
[sweep.base]
seed = 3
roster = ["logistic_regression"]
dataset = { type = "simulated", n_features = 3, n_samples = 100 }
profiler = { method = "cleanlab" }
generator = { kind = "marginal_hist" }
"#;
    fs::write(dir.path().join("ns.toml"), config).unwrap();
    let o = dcsynth(
        &["noise-sweep", "--config", "ns.toml", "--out", "ns"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let agg = fs::read_to_string(dir.path().join("ns/aggregate.csv")).unwrap();
    assert!(agg.starts_with("noise,"));
    let mut levels: Vec<&str> = agg
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    levels.dedup();
    assert_eq!(levels, ["0", "0.02", "0.04", "0.06", "0.08", "0.1"]);
    let reference = fs::read_to_string(dir.path().join("ns/reference.csv")).unwrap();
    assert_eq!(reference.lines().count(), 1 + 6);
}

#[test]
fn generate_round_trips_through_a_saved_model() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcsynth(
        &[
            "simulate",
            "--features",
            "3",
            "--samples",
            "200",
            "--out",
            ".",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = dcsynth(
        &[
            "generate",
            "simulated.csv",
            "--generator",
            "chow_liu_bn",
            "--preprocessing",
            "easy_hard",
            "--save-model",
            "model.json",
            "--n",
            "150",
            "--out",
            "g1",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = dcsynth(
        &[
            "generate",
            "--model",
            "model.json",
            "--n",
            "150",
            "--out",
            "g2",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let a = fs::read_to_string(dir.path().join("g1/synthetic.csv")).unwrap();
    let b = fs::read_to_string(dir.path().join("g2/synthetic.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 151);

    let o = dcsynth(
        &[
            "evaluate",
            "--real",
            "simulated.csv",
            "--synth",
            "g1/synthetic.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let ikl = doc["fidelity"]["inverse_kl"].as_f64().unwrap();
    assert!(ikl > 0.5 && ikl <= 1.0, "{ikl}");
}

#[test]
fn report_rebuilds_tables_from_result_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.toml"), SMALL_RUN).unwrap();
    assert_eq!(
        code(&dcsynth(&["run", "--config", "exp.toml"], dir.path())),
        0
    );
    let o = dcsynth(
        &[
            "report",
            "--results",
            "out",
            "--group-by",
            "generator,postprocessing",
            "--out",
            "rep",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let agg = fs::read_to_string(dir.path().join("rep/aggregate.csv")).unwrap();
    assert!(agg.starts_with("generator,postprocessing,metric,"));
    let o = dcsynth(
        &["report", "--results", "out", "--group-by", "colour"],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
}
