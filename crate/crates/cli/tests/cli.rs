use std::path::Path;
use std::process::{Command, Output};

use robust_mc::bench::{read_csv, ExperimentSpec, Preset};
use robust_mc::matcore::RngStream;
use robust_mc::synth::{make_ground_truth, sample_observations, NoiseModel};
use robust_mc::DenseMatrix;

fn robust_mc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robust-mc"))
        .args(args)
        .env("ROBUST_MC_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn presets_print_parseable_specs() {
    let out = robust_mc(&["presets"]);
    assert!(out.status.success());
    let specs: Vec<ExperimentSpec> = serde_json::from_str(&stdout(&out)).unwrap();
    let expected: Vec<ExperimentSpec> = Preset::ALL
        .iter()
        .map(|&p| ExperimentSpec::preset(p))
        .collect();
    assert_eq!(specs, expected);
}

fn write_small_spec(dir: &Path) -> std::path::PathBuf {
    let mut spec = ExperimentSpec::preset(Preset::Fig4LsRatio);
    spec.n = 20;
    spec.r = 2;
    spec.p = 0.6;
    spec.trials = 2;
    spec.max_iters = 60;
    spec.sigma_grid = vec![1e-3];
    let path = dir.join("spec.json");
    std::fs::write(&path, serde_json::to_string(&spec).unwrap()).unwrap();
    path
}

#[test]
fn run_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_small_spec(dir.path());
    let csv = dir.path().join("results.csv");
    let json = dir.path().join("results.json");
    let out = robust_mc(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let records = read_csv(&csv).unwrap();
    // 3 distributions × 1 σ × 2 trials × (7 τ + least squares)
    assert_eq!(records.len(), 48);
    let text = stdout(&out);
    assert!(text.contains("48 rows written"));
    assert!(text.contains("huber/ls median"));
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(value["ls_ratios"].as_array().unwrap().len(), 3);
}

#[test]
fn run_accepts_preset_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig1.csv");
    let traj = dir.path().join("traj.csv");
    let out = robust_mc(&[
        "run",
        "--preset",
        "fig1_convergence",
        "--n",
        "16",
        "--trials",
        "1",
        "--out",
        csv.to_str().unwrap(),
        "--trajectories",
        traj.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(read_csv(&csv).unwrap().len(), 12);
    // 12 runs × 1001 recorded iterates + header
    assert_eq!(
        std::fs::read_to_string(traj).unwrap().lines().count(),
        12 * 1001 + 1
    );
}

#[test]
fn solve_prints_trace_and_completes() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = RngStream::new(3, 0);
    let truth = make_ground_truth(30, 2, &mut rng).unwrap();
    let obs = sample_observations(&truth, 0.5, &NoiseModel::None, &mut rng).unwrap();
    let (m, mask) = (dir.path().join("m.txt"), dir.path().join("mask.txt"));
    obs.values().save(&m).unwrap();
    obs.mask().save(&mask).unwrap();
    let completed = dir.path().join("completed.txt");
    let out = robust_mc(&[
        "solve",
        "--matrix",
        m.to_str().unwrap(),
        "--mask",
        mask.to_str().unwrap(),
        "--rank",
        "2",
        "--tau",
        "inf",
        "--eta",
        "0.05",
        "--p",
        "0.5",
        "--max-iters",
        "5000",
        "--out",
        completed.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter rel_change objective"));
    let first: Vec<&str> = lines.next().unwrap().split(' ').collect();
    assert_eq!(first[..2], ["0", "-"]);
    let last_change: f64 = text
        .lines()
        .rfind(|l| !l.starts_with('#'))
        .unwrap()
        .split(' ')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(last_change <= 1e-10);
    assert!(text.lines().last().unwrap().contains("Tolerance"));
    let done = DenseMatrix::load(&completed).unwrap();
    let err = robust_mc::matcore::frob_norm(&done.sub(&truth.m_star).unwrap()).unwrap()
        / robust_mc::matcore::frob_norm(&truth.m_star).unwrap();
    assert!(err <= 1e-6, "completion error {err}");
}

#[test]
fn errors_name_the_offending_file() {
    let out = robust_mc(&[
        "solve",
        "--matrix",
        "/no/such/m.txt",
        "--mask",
        "/no/such/mask.txt",
        "--rank",
        "2",
        "--tau",
        "1",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/m.txt"));

    let out = robust_mc(&["run", "--preset", "fig9", "--out", "/tmp/x.csv"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig9"));
}
