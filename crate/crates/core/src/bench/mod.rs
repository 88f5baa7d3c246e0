//! Experiment campaigns: presets, trial orchestration and aggregation.
//!
//! Each trial draws a fresh ground truth and observation set from a seed
//! derived from the master seed and the trial coordinates, then runs every
//! τ of the campaign on that same realization. Results come back in
//! coordinate order no matter how the worker pool schedules the trials.

mod io;
mod presets;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use io::{
    emit_csv, emit_json, emit_trajectories_csv, read_csv, read_csv_from, write_csv, CSV_HEADER,
};
pub use presets::log_space;

use crate::error::{Error, Result};
use crate::init::spectral_initialize;
use crate::matcore::{mix_seed, RngStream};
use crate::model::{HuberParams, ObservationSet};
use crate::solver::{gd_run, GdConfig, TracePoint};
use crate::synth::{make_ground_truth, sample_observations, GroundTruth, NoiseFamily};

/// Environment variable bounding the worker pool.
pub const THREADS_ENV: &str = "ROBUST_MC_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Fig1Convergence,
    Fig2SigmaSweep,
    Fig3TauSweep,
    Fig4LsRatio,
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Fig1Convergence,
        Preset::Fig2SigmaSweep,
        Preset::Fig3TauSweep,
        Preset::Fig4LsRatio,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig1Convergence => "fig1_convergence",
            Preset::Fig2SigmaSweep => "fig2_sigma_sweep",
            Preset::Fig3TauSweep => "fig3_tau_sweep",
            Preset::Fig4LsRatio => "fig4_ls_ratio",
            Preset::Custom => "custom",
        }
    }

    pub fn from_name(name: &str) -> Result<Preset> {
        Preset::ALL
            .into_iter()
            .chain([Preset::Custom])
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::Parse(format!("unknown preset {name:?}")))
    }

    fn code(&self) -> u64 {
        match self {
            Preset::Fig1Convergence => 1,
            Preset::Fig2SigmaSweep => 2,
            Preset::Fig3TauSweep => 3,
            Preset::Fig4LsRatio => 4,
            Preset::Custom => 0,
        }
    }
}

/// How the Huber threshold is chosen for a trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TauRule {
    /// `τ = c_tau (‖M⋆‖∞ + σ√(np))` from the trial's own instance.
    PaperRule {
        c_tau: f64,
    },
    ExplicitGrid {
        values: Vec<f64>,
    },
    /// Least squares.
    Infinity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub preset: Preset,
    pub n: usize,
    pub r: usize,
    pub p: f64,
    pub distributions: Vec<NoiseFamily>,
    pub sigma_grid: Vec<f64>,
    pub tau_rule: TauRule,
    pub trials: usize,
    pub eta: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub master_seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.distributions.is_empty() || self.sigma_grid.is_empty() {
            return Err(Error::domain(
                "distribution list and sigma grid must be nonempty",
            ));
        }
        if self.trials == 0 {
            return Err(Error::domain("trials must be at least 1"));
        }
        if self.r == 0 || self.r > self.n {
            return Err(Error::shape(format!(
                "rank {} out of range for n = {}",
                self.r, self.n
            )));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::domain(format!(
                "sampling rate {} outside (0, 1]",
                self.p
            )));
        }
        if let Some(s) = self
            .sigma_grid
            .iter()
            .find(|s| !(**s >= 0.0 && s.is_finite()))
        {
            return Err(Error::domain(format!(
                "noise level {s} must be finite and ≥ 0"
            )));
        }
        for family in &self.distributions {
            family.at(1.0).validate()?;
        }
        match &self.tau_rule {
            TauRule::PaperRule { c_tau } if c_tau.is_nan() || *c_tau <= 0.0 => {
                return Err(Error::domain("c_tau must be positive"))
            }
            TauRule::ExplicitGrid { values } if values.is_empty() => {
                return Err(Error::domain("tau grid must be nonempty"))
            }
            TauRule::ExplicitGrid { values } => {
                for &t in values {
                    HuberParams::new(t)?;
                }
            }
            _ => {}
        }
        let mut cfg = GdConfig::new(self.eta, 1.0);
        cfg.max_iters = self.max_iters;
        cfg.rel_change_tol = self.tol;
        cfg.validate()
    }

    /// Whether trials keep per-iteration trajectories.
    pub fn records_trajectories(&self) -> bool {
        self.preset == Preset::Fig1Convergence
    }

    /// Whether τ is a fixed grid shared by all trials, as opposed to a rule
    /// evaluated on each trial's ground truth.
    pub fn shares_tau_grid(&self) -> bool {
        !matches!(self.tau_rule, TauRule::PaperRule { .. })
    }

    /// Whether trials add a least-squares run on the same realization.
    pub fn compares_least_squares(&self) -> bool {
        self.preset == Preset::Fig4LsRatio
    }

    /// Seed of one trial realization. The τ index is deliberately not part
    /// of the key so every τ (and the least-squares baseline) of a trial
    /// sees the same data.
    pub fn trial_seed(&self, dist_index: usize, sigma_index: usize, trial: usize) -> u64 {
        mix_seed(&[
            self.master_seed,
            self.preset.code(),
            dist_index as u64,
            sigma_index as u64,
            trial as u64,
        ])
    }

    fn taus_for(&self, truth: &GroundTruth, sigma: f64) -> Result<Vec<f64>> {
        let mut taus = match &self.tau_rule {
            TauRule::PaperRule { c_tau } => {
                vec![HuberParams::adaptive(*c_tau, truth.m_star_inf(), sigma, self.n, self.p)?.tau]
            }
            TauRule::ExplicitGrid { values } => values.clone(),
            TauRule::Infinity => vec![f64::INFINITY],
        };
        if self.compares_least_squares() && !taus.iter().any(|t| t.is_infinite()) {
            taus.push(f64::INFINITY);
        }
        Ok(taus)
    }
}

/// Ground truth and observations of one trial.
pub fn trial_realization(
    spec: &ExperimentSpec,
    family: NoiseFamily,
    sigma: f64,
    seed: u64,
) -> Result<(GroundTruth, ObservationSet)> {
    let truth = make_ground_truth(spec.n, spec.r, &mut RngStream::new(seed, 0))?;
    let obs = sample_observations(
        &truth,
        spec.p,
        &family.at(sigma),
        &mut RngStream::new(seed, 1),
    )?;
    Ok((truth, obs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub preset: Preset,
    pub distribution: String,
    pub sigma: f64,
    pub tau: f64,
    pub trial: usize,
    pub seed: u64,
    /// NaN marks a failed (diverged) run.
    pub rel_error: f64,
    pub iterations: usize,
    pub wall_ms: f64,
    /// Index into [`ExperimentResult::trajectories`].
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trajectory: Option<usize>,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        self.rel_error.is_nan()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub distribution: String,
    pub sigma: f64,
    pub tau: f64,
    pub trial: usize,
    pub points: Vec<TracePoint>,
}

/// Identity of the data a trial ran on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub distribution: String,
    pub sigma: f64,
    pub trial: usize,
    pub seed: u64,
    pub obs_fingerprint: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LsRatio {
    pub distribution: String,
    pub sigma: f64,
    /// Median over trials of `min_τ err_τ / err_LS`.
    pub median_trial_ratio: f64,
    /// `min_τ mean_err_τ / mean_err_LS`.
    pub ratio_of_means: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub records: Vec<TrialRecord>,
    pub trajectories: Vec<Trajectory>,
    pub realizations: Vec<Realization>,
}

impl ExperimentResult {
    pub fn ls_ratios(&self) -> Vec<LsRatio> {
        ls_ratios(&self.records)
    }
}

struct TrialTask {
    dist_index: usize,
    family: NoiseFamily,
    sigma_index: usize,
    sigma: f64,
    trial: usize,
}

struct TrialOutput {
    records: Vec<TrialRecord>,
    trajectories: Vec<Trajectory>,
    realization: Realization,
}

fn run_trial(spec: &ExperimentSpec, task: &TrialTask) -> Result<TrialOutput> {
    let seed = spec.trial_seed(task.dist_index, task.sigma_index, task.trial);
    let (truth, obs) = trial_realization(spec, task.family, task.sigma, seed)?;
    let distribution = task.family.name();
    let mut records = Vec::new();
    let mut trajectories = Vec::new();
    for tau in spec.taus_for(&truth, task.sigma)? {
        let mut cfg = GdConfig::new(spec.eta, tau);
        cfg.max_iters = spec.max_iters;
        cfg.rel_change_tol = spec.tol;
        cfg.record_every = if spec.records_trajectories() {
            GdConfig::default_record_every(spec.n)
        } else {
            spec.max_iters
        };
        let start = Instant::now();
        let outcome = spectral_initialize(&obs, tau, spec.r)
            .and_then(|init| gd_run(&init.factors, &obs, &cfg, Some(&truth.m_star)));
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let mut record = TrialRecord {
            preset: spec.preset,
            distribution: distribution.clone(),
            sigma: task.sigma,
            tau,
            trial: task.trial,
            seed,
            rel_error: f64::NAN,
            iterations: 0,
            wall_ms,
            trajectory: None,
        };
        match outcome {
            Ok(trace) => {
                record.rel_error = trace.final_rel_error().unwrap_or(f64::NAN);
                record.iterations = trace.iters_run;
                if spec.records_trajectories() {
                    record.trajectory = Some(trajectories.len());
                    trajectories.push(Trajectory {
                        distribution: distribution.clone(),
                        sigma: task.sigma,
                        tau,
                        trial: task.trial,
                        points: trace.records,
                    });
                }
            }
            Err(Error::Divergence { iteration, .. })
            | Err(Error::Numeric {
                iterations: iteration,
                ..
            }) => {
                record.iterations = iteration;
            }
            Err(e) => return Err(e),
        }
        records.push(record);
    }
    Ok(TrialOutput {
        records,
        trajectories,
        realization: Realization {
            distribution,
            sigma: task.sigma,
            trial: task.trial,
            seed,
            obs_fingerprint: obs.fingerprint(),
        },
    })
}

/// Runs every (distribution × σ × trial × τ) cell of a campaign.
///
/// Solver divergence is recorded as a failed row (NaN error) and does not
/// abort the campaign.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let mut tasks = Vec::new();
    for (dist_index, family) in spec.distributions.iter().enumerate() {
        for (sigma_index, &sigma) in spec.sigma_grid.iter().enumerate() {
            for trial in 0..spec.trials {
                tasks.push(TrialTask {
                    dist_index,
                    family: *family,
                    sigma_index,
                    sigma,
                    trial,
                });
            }
        }
    }

    let outputs = execute(spec, &tasks)?;

    let mut result = ExperimentResult::default();
    for out in outputs {
        let offset = result.trajectories.len();
        result.records.extend(out.records.into_iter().map(|mut r| {
            r.trajectory = r.trajectory.map(|k| k + offset);
            r
        }));
        result.trajectories.extend(out.trajectories);
        result.realizations.push(out.realization);
    }
    Ok(result)
}

#[cfg(feature = "parallel")]
fn execute(spec: &ExperimentSpec, tasks: &[TrialTask]) -> Result<Vec<TrialOutput>> {
    use rayon::prelude::*;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_threads() {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?;
    pool.install(|| tasks.par_iter().map(|t| run_trial(spec, t)).collect())
}

#[cfg(not(feature = "parallel"))]
fn execute(spec: &ExperimentSpec, tasks: &[TrialTask]) -> Result<Vec<TrialOutput>> {
    tasks.iter().map(|t| run_trial(spec, t)).collect()
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn worker_threads() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Huber-versus-least-squares ratios per (distribution, σ).
///
/// Rows with `tau = +∞` are the least-squares baseline; failed rows are
/// ignored.
pub fn ls_ratios(records: &[TrialRecord]) -> Vec<LsRatio> {
    let mut groups: Vec<(String, f64)> = Vec::new();
    for r in records {
        if !groups
            .iter()
            .any(|(d, s)| *d == r.distribution && *s == r.sigma)
        {
            groups.push((r.distribution.clone(), r.sigma));
        }
    }
    let mut out = Vec::new();
    for (dist, sigma) in groups {
        let rows: Vec<&TrialRecord> = records
            .iter()
            .filter(|r| r.distribution == dist && r.sigma == sigma && !r.failed())
            .collect();
        let trials: Vec<usize> = {
            let mut t: Vec<usize> = rows.iter().map(|r| r.trial).collect();
            t.sort_unstable();
            t.dedup();
            t
        };
        let mut per_trial = Vec::new();
        for &trial in &trials {
            let ls = rows
                .iter()
                .find(|r| r.trial == trial && r.tau.is_infinite());
            let best = rows
                .iter()
                .filter(|r| r.trial == trial && r.tau.is_finite())
                .map(|r| r.rel_error)
                .fold(f64::INFINITY, f64::min);
            if let Some(ls) = ls {
                if best.is_finite() && ls.rel_error > 0.0 {
                    per_trial.push(best / ls.rel_error);
                }
            }
        }
        if per_trial.is_empty() {
            continue;
        }
        let mut taus: Vec<f64> = rows
            .iter()
            .filter(|r| r.tau.is_finite())
            .map(|r| r.tau)
            .collect();
        taus.sort_by(f64::total_cmp);
        taus.dedup();
        let mean_at = |pred: &dyn Fn(f64) -> bool| -> f64 {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| pred(r.tau))
                .map(|r| r.rel_error)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let best_mean = taus
            .iter()
            .map(|&t| mean_at(&|x| x == t))
            .fold(f64::INFINITY, f64::min);
        let ls_mean = mean_at(&|x: f64| x.is_infinite());
        out.push(LsRatio {
            distribution: dist,
            sigma,
            median_trial_ratio: median(&mut per_trial),
            ratio_of_means: best_mean / ls_mean,
            trials: per_trial.len(),
        });
    }
    out
}

pub(crate) fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Mean final error of one table cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellMean {
    pub distribution: String,
    pub sigma: f64,
    /// `None` when finite thresholds were pooled (per-trial τ rule).
    pub tau: Option<f64>,
    pub mean_error: f64,
    /// Successful trials in the cell.
    pub trials: usize,
}

/// Mean final error over successful trials, in first-appearance order.
///
/// With `per_tau` the cells are (distribution, σ, τ). Without it every
/// finite τ of a (distribution, σ) pair is pooled, which is what a per-trial
/// rule such as the paper rule needs; least-squares rows stay separate.
pub fn mean_errors(records: &[TrialRecord], per_tau: bool) -> Vec<CellMean> {
    let key = |r: &TrialRecord| {
        let tau = if per_tau || r.tau.is_infinite() {
            Some(r.tau.to_bits())
        } else {
            None
        };
        (r.distribution.clone(), r.sigma.to_bits(), tau)
    };
    let mut keys = Vec::new();
    for r in records {
        let k = key(r);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|k| {
            let v: Vec<f64> = records
                .iter()
                .filter(|r| key(r) == k && !r.failed())
                .map(|r| r.rel_error)
                .collect();
            CellMean {
                sigma: f64::from_bits(k.1),
                tau: k.2.map(f64::from_bits),
                mean_error: v.iter().sum::<f64>() / v.len() as f64,
                trials: v.len(),
                distribution: k.0,
            }
        })
        .collect()
}
