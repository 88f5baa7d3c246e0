use robust_mc::bench::{
    emit_json, emit_trajectories_csv, read_csv, run_experiment, trial_realization, write_csv,
    ExperimentSpec, Preset, TauRule, TrialRecord, THREADS_ENV,
};
use robust_mc::matcore::RngStream;
use robust_mc::synth::make_ground_truth;
use robust_mc::HuberParams;

fn small(preset: Preset) -> ExperimentSpec {
    let mut spec = ExperimentSpec::preset(preset);
    spec.n = 20;
    spec.r = 2;
    spec.p = 0.6;
    spec.trials = 2;
    spec.max_iters = 80;
    spec.sigma_grid.truncate(2);
    if let TauRule::ExplicitGrid { values } = &mut spec.tau_rule {
        values.truncate(3);
    }
    spec
}

fn csv_bytes(mut records: Vec<TrialRecord>) -> Vec<u8> {
    for r in &mut records {
        r.wall_ms = 0.0;
    }
    let mut buf = Vec::new();
    write_csv(&records, &mut buf).unwrap();
    buf
}

#[test]
fn replay_is_byte_identical_across_thread_counts() {
    let spec = small(Preset::Fig2SigmaSweep);
    std::env::set_var(THREADS_ENV, "1");
    let a = csv_bytes(run_experiment(&spec).unwrap().records);
    std::env::set_var(THREADS_ENV, "3");
    let b = csv_bytes(run_experiment(&spec).unwrap().records);
    std::env::remove_var(THREADS_ENV);
    let c = csv_bytes(run_experiment(&spec).unwrap().records);
    assert_eq!(a, b);
    assert_eq!(a, c);
    let mut other = spec.clone();
    other.master_seed += 1;
    assert_ne!(a, csv_bytes(run_experiment(&other).unwrap().records));
}

#[test]
fn least_squares_runs_share_each_trial_realization() {
    let spec = small(Preset::Fig4LsRatio);
    let result = run_experiment(&spec).unwrap();
    let cells = spec.distributions.len() * spec.sigma_grid.len() * spec.trials;
    assert_eq!(result.realizations.len(), cells);
    assert_eq!(result.records.len(), cells * 4);
    for real in &result.realizations {
        let family = spec
            .distributions
            .iter()
            .find(|f| f.name() == real.distribution)
            .unwrap();
        let (_, obs) = trial_realization(&spec, *family, real.sigma, real.seed).unwrap();
        assert_eq!(obs.fingerprint(), real.obs_fingerprint);
        let rows: Vec<&TrialRecord> = result
            .records
            .iter()
            .filter(|r| {
                r.distribution == real.distribution
                    && r.sigma == real.sigma
                    && r.trial == real.trial
            })
            .collect();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.seed == real.seed));
        assert_eq!(rows.iter().filter(|r| r.tau.is_infinite()).count(), 1);
    }
    assert_eq!(
        result.ls_ratios().len(),
        spec.distributions.len() * spec.sigma_grid.len()
    );
}

#[test]
fn paper_tau_rule_increases_with_sigma() {
    let truth = make_ground_truth(50, 3, &mut RngStream::new(80, 0)).unwrap();
    let taus: Vec<f64> = [0.0, 1e-6, 1e-4, 1e-2, 1.0]
        .iter()
        .map(|&s| {
            HuberParams::adaptive(3.0, truth.m_star_inf(), s, 50, 0.3)
                .unwrap()
                .tau
        })
        .collect();
    assert!(taus.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn outputs_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small(Preset::Fig1Convergence);
    let result = run_experiment(&spec).unwrap();
    assert_eq!(result.trajectories.len(), result.records.len());

    let csv = dir.path().join("results.csv");
    robust_mc::bench::emit_csv(&result.records, &csv).unwrap();
    let back = read_csv(&csv).unwrap();
    assert_eq!(back.len(), result.records.len());
    for (a, b) in back.iter().zip(&result.records) {
        assert_eq!(a.rel_error.to_bits(), b.rel_error.to_bits());
        assert_eq!(a.seed, b.seed);
    }

    let traj = dir.path().join("traj.csv");
    emit_trajectories_csv(spec.preset, &result.trajectories, &traj).unwrap();
    let lines = std::fs::read_to_string(&traj).unwrap().lines().count();
    let points: usize = result.trajectories.iter().map(|t| t.points.len()).sum();
    assert_eq!(lines, points + 1);

    let json = dir.path().join("results.json");
    emit_json(&spec, &result, &json).unwrap();
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(
        value["records"].as_array().unwrap().len(),
        result.records.len()
    );
    assert_eq!(value["spec"]["preset"], "fig1_convergence");
    let parsed: ExperimentSpec = serde_json::from_value(value["spec"].clone()).unwrap();
    assert_eq!(parsed, spec);
}

#[test]
fn per_trial_tau_rule_pools_cells() {
    let spec = small(Preset::Fig2SigmaSweep);
    assert!(!spec.shares_tau_grid());
    let result = run_experiment(&spec).unwrap();
    let pooled = robust_mc::bench::mean_errors(&result.records, false);
    assert_eq!(
        pooled.len(),
        spec.distributions.len() * spec.sigma_grid.len()
    );
    assert!(pooled
        .iter()
        .all(|c| c.trials == spec.trials && c.tau.is_none()));

    let spec = small(Preset::Fig4LsRatio);
    let result = run_experiment(&spec).unwrap();
    let cells = robust_mc::bench::mean_errors(&result.records, spec.shares_tau_grid());
    assert_eq!(
        cells.len(),
        spec.distributions.len() * spec.sigma_grid.len() * 4
    );
    let ls = cells
        .iter()
        .filter(|c| c.tau == Some(f64::INFINITY))
        .count();
    assert_eq!(ls, spec.distributions.len() * spec.sigma_grid.len());
}

#[test]
fn preset_specs_round_trip_through_json_exactly() {
    for preset in Preset::ALL {
        let spec = ExperimentSpec::preset(preset);
        let text = serde_json::to_string(&spec).unwrap();
        let back: ExperimentSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }
}
