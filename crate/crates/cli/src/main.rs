use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use robust_mc::bench::{
    emit_csv, emit_json, emit_trajectories_csv, mean_errors, run_experiment, ExperimentSpec, Preset,
};
use robust_mc::init::spectral_initialize;
use robust_mc::solver::{gd_run, GdConfig};
use robust_mc::{DenseMatrix, ObservationSet};

#[derive(Parser)]
#[command(
    name = "robust-mc",
    version,
    about = "Robust matrix completion with the Huber loss"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment campaign and write its per-trial rows as CSV.
    Run {
        /// JSON experiment spec (field names as printed by `presets`).
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// Use a built-in preset instead of a config file.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Also write spec, records and summaries as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Per-iteration trajectories (fig1 campaigns only).
        #[arg(long)]
        trajectories: Option<PathBuf>,
        /// Override the matrix dimension.
        #[arg(long)]
        n: Option<usize>,
        /// Override the number of trials.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Complete one partially observed matrix and print the relative-change trace.
    Solve {
        /// Observed values (text: `rows cols` header, then rows).
        #[arg(long)]
        matrix: PathBuf,
        /// 0/1 observation mask of the same shape.
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        rank: usize,
        /// Huber threshold; `inf` gives least squares.
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 0.05)]
        eta: f64,
        /// Sampling rate; defaults to the observed fraction of the mask.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Write the completed matrix X Yᵀ here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the default fig1–fig4 specs as JSON.
    Presets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            preset,
            out,
            json,
            trajectories,
            n,
            trials,
        } => run(config, preset, out, json, trajectories, n, trials),
        Command::Solve {
            matrix,
            mask,
            rank,
            tau,
            eta,
            p,
            max_iters,
            tol,
            out,
        } => solve(matrix, mask, rank, tau, eta, p, max_iters, tol, out),
        Command::Presets => presets(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn load_spec(
    config: Option<PathBuf>,
    preset: Option<String>,
) -> Result<ExperimentSpec, Box<dyn std::error::Error>> {
    if let Some(name) = preset {
        return Ok(ExperimentSpec::preset(Preset::from_name(&name)?));
    }
    let path = config.expect("clap requires --config or --preset");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let spec = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(spec)
}

fn run(
    config: Option<PathBuf>,
    preset: Option<String>,
    out: PathBuf,
    json: Option<PathBuf>,
    trajectories: Option<PathBuf>,
    n: Option<usize>,
    trials: Option<usize>,
) -> CliResult {
    let mut spec = load_spec(config, preset)?;
    if let Some(n) = n {
        spec.n = n;
    }
    if let Some(t) = trials {
        spec.trials = t;
    }
    let result = run_experiment(&spec)?;
    emit_csv(&result.records, &out)?;
    if let Some(path) = json {
        emit_json(&spec, &result, path)?;
    }
    if let Some(path) = trajectories {
        emit_trajectories_csv(spec.preset, &result.trajectories, path)?;
    }

    let failed = result.records.iter().filter(|r| r.failed()).count();
    println!(
        "{} rows written to {} ({failed} failed)",
        result.records.len(),
        out.display()
    );
    println!(
        "{:<24} {:>10} {:>10} {:>12}",
        "distribution", "sigma", "tau", "mean error"
    );
    for cell in mean_errors(&result.records, spec.shares_tau_grid()) {
        let tau = cell
            .tau
            .map_or_else(|| "rule".to_string(), |t| format!("{t:.2e}"));
        println!(
            "{:<24} {:>10.1e} {tau:>10} {:>12.4e}",
            cell.distribution, cell.sigma, cell.mean_error
        );
    }
    for ratio in result.ls_ratios() {
        println!(
            "{:<24} {:>10.1e} huber/ls median {:.4} (ratio of means {:.4})",
            ratio.distribution, ratio.sigma, ratio.median_trial_ratio, ratio.ratio_of_means
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn solve(
    matrix: PathBuf,
    mask: PathBuf,
    rank: usize,
    tau: f64,
    eta: f64,
    p: Option<f64>,
    max_iters: usize,
    tol: f64,
    out: Option<PathBuf>,
) -> CliResult {
    let values = DenseMatrix::load(&matrix)?;
    let mask_m = DenseMatrix::load(&mask)?;
    let observed = mask_m.as_slice().iter().filter(|&&m| m != 0.0).count();
    let p = p.unwrap_or(observed as f64 / mask_m.as_slice().len().max(1) as f64);
    let obs = ObservationSet::from_mask(&values, &mask_m, p)?;

    let mut cfg = GdConfig::new(eta, tau);
    cfg.max_iters = max_iters;
    cfg.rel_change_tol = tol;
    let init = spectral_initialize(&obs, tau, rank)?;
    let trace = gd_run(&init.factors, &obs, &cfg, None)?;

    println!("iter rel_change objective");
    for point in &trace.records {
        let change = point
            .rel_change
            .map_or_else(|| "-".to_string(), |c| format!("{c:.6e}"));
        println!("{} {change} {:.10e}", point.iter, point.objective);
    }
    println!(
        "# stopped after {} iterations ({:?})",
        trace.iters_run, trace.stop_reason
    );
    if let Some(path) = out {
        trace.final_factors.product().save(path)?;
    }
    Ok(())
}

fn presets() -> CliResult {
    let specs: Vec<ExperimentSpec> = Preset::ALL
        .iter()
        .map(|&p| ExperimentSpec::preset(p))
        .collect();
    println!("{}", serde_json::to_string_pretty(&specs)?);
    Ok(())
}
