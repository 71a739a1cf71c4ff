use std::path::{Path, PathBuf};
use std::process::Command;

use fairkm::clustering::InitMethod;
use fairkm_cli::report::render_report;
use fairkm_cli::{execute, gen_synthetic, Algo, RunSpec, SynthParams};

fn synth_file(dir: &Path, name: &str, n_per_group: Vec<usize>, seed: u64) -> PathBuf {
    let out = dir.join(name);
    gen_synthetic(&SynthParams {
        out: out.clone(),
        n_per_group,
        clusters: 2,
        dim: 2,
        separation: 20.0,
        skew: 4.0,
        seed,
    })
    .unwrap();
    out
}

fn base_spec(input: PathBuf) -> RunSpec {
    RunSpec {
        input,
        group_col: "group".into(),
        ks: vec![2, 3],
        algo: Algo::Both,
        init: InitMethod::Random,
        restarts: 8,
        iterations: 50,
        seed: 5,
        preprocess: None,
        threads: 1,
        timings: false,
    }
}

#[test]
fn identical_spec_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_file(dir.path(), "d.csv", vec![120, 40], 9);
    let spec = base_spec(input);
    let (r1, _) = execute(&spec).unwrap();
    let (r2, _) = execute(&spec).unwrap();
    assert_eq!(render_report(&r1).unwrap(), render_report(&r2).unwrap());
}

#[test]
fn thread_count_does_not_change_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_file(dir.path(), "d.csv", vec![120, 40], 11);
    let spec1 = base_spec(input.clone());
    let mut spec4 = base_spec(input);
    spec4.threads = 4;
    let (r1, _) = execute(&spec1).unwrap();
    let (r4, _) = execute(&spec4).unwrap();
    let (mut b1, mut b4) = (render_report(&r1).unwrap(), render_report(&r4).unwrap());
    // The echoed thread count is the only legitimate difference.
    for b in [&mut b1, &mut b4] {
        let s = String::from_utf8(b.clone()).unwrap();
        *b = s.replace("\"threads\": 4", "\"threads\": 1").into_bytes();
    }
    assert_eq!(b1, b4);
}

#[test]
fn both_algorithms_cover_every_k_and_group() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_file(dir.path(), "d.csv", vec![80, 30], 2);
    let spec = base_spec(input);
    let (report, _) = execute(&spec).unwrap();
    assert_eq!(report.runs.len(), 4); // 2 algorithms x 2 k values
    for k in [2usize, 3] {
        for algo in ["lloyd", "fair-lloyd"] {
            let run = report
                .runs
                .iter()
                .find(|r| r.k == k && r.algorithm == algo)
                .expect("run present");
            assert_eq!(run.metrics.per_group_cost.len(), 2);
            assert!((run.algorithm == "fair-lloyd") == run.fair.is_some());
            assert!(run.wall_time_seconds.is_none());
        }
    }
    // fair-lloyd equalizes the two groups on this equalizable instance
    for run in report.runs.iter().filter(|r| r.algorithm == "fair-lloyd") {
        let ratio = run.metrics.max_cost_ratio.unwrap();
        assert!(ratio <= 1.0 + 1e-6, "k={} ratio {}", run.k, ratio);
    }
}

#[test]
fn preprocess_pipeline_tracks_k() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    gen_synthetic(&SynthParams {
        out: out.clone(),
        n_per_group: vec![60, 30],
        clusters: 2,
        dim: 4,
        separation: 15.0,
        skew: 3.0,
        seed: 4,
    })
    .unwrap();
    let mut spec = base_spec(out);
    spec.ks = vec![2, 3];
    spec.preprocess = Some("zscore,pca:k".into());
    let (report, _) = execute(&spec).unwrap();
    for run in &report.runs {
        assert_eq!(run.used_dim, run.k, "pca:k must project to k dims");
    }
}

#[test]
fn timings_flag_adds_wall_times() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_file(dir.path(), "d.csv", vec![50, 20], 6);
    let mut spec = base_spec(input);
    spec.timings = true;
    spec.ks = vec![2];
    let (report, _) = execute(&spec).unwrap();
    assert!(report.runs.iter().all(|r| r.wall_time_seconds.is_some()));
}

#[test]
fn fairpca_request_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_file(dir.path(), "d.csv", vec![30, 20], 8);
    let mut spec = base_spec(input);
    spec.preprocess = Some("fairpca:2".into());
    let err = execute(&spec).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().to_lowercase().contains("fair"));
}

fn fairkm_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fairkm"))
}

#[test]
fn binary_exit_codes_and_error_json() {
    // input error: missing file -> exit 1 with machine-readable stderr
    let out = fairkm_bin()
        .args(["run", "--input", "/nonexistent.csv", "--group-col", "g", "--k", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "input");
    assert!(err["error"]["message"].as_str().unwrap().contains("nonexistent"));
}

#[test]
fn binary_end_to_end_run() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_file(dir.path(), "d.csv", vec![60, 20], 12);
    let report_path = dir.path().join("report.json");
    let plots = dir.path().join("plots");
    let out = fairkm_bin()
        .args([
            "run",
            "--input",
            input.to_str().unwrap(),
            "--group-col",
            "group",
            "--k",
            "2..3",
            "--algo",
            "both",
            "--restarts",
            "4",
            "--iters",
            "30",
            "--seed",
            "1",
            "--out-report",
            report_path.to_str().unwrap(),
            "--out-plotdata",
            plots.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["runs"].as_array().unwrap().len(), 4);
    let gc = std::fs::read_to_string(dir.path().join("plots.group_costs.csv")).unwrap();
    // header + 2 algorithms x 2 ks x 2 groups
    assert_eq!(gc.lines().count(), 1 + 8);
    let ratios = std::fs::read_to_string(dir.path().join("plots.ratios.csv")).unwrap();
    assert_eq!(ratios.lines().count(), 1 + 4);
}
