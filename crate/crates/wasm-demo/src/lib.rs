//! Browser bindings: Huber loss curves, noise histograms, and a small
//! Huber-versus-least-squares completion run.
//!
//! The `*_impl` functions hold the logic and run natively; the exported
//! wrappers only convert errors.

use robust_mc::init::spectral_initialize;
use robust_mc::matcore::{mix_seed, RngStream};
use robust_mc::model::{huber_rho, psi_tau};
use robust_mc::solver::{gd_run, GdConfig};
use robust_mc::synth::{make_ground_truth, sample_observations, NoiseModel};
use robust_mc::HuberParams;
use wasm_bindgen::prelude::*;

/// Builds a noise law from the demo's drop-down name and its shape
/// parameter (`nu` for Student's t, `delta` for the discrete laws).
pub fn noise_model(kind: &str, sigma: f64, param: f64) -> Result<NoiseModel, String> {
    let model = match kind {
        "gaussian" => NoiseModel::Gaussian { sigma },
        "student_t" => NoiseModel::StudentT { nu: param, sigma },
        "trinomial" => NoiseModel::Trinomial {
            delta: param,
            sigma,
        },
        "asym_two_point" => NoiseModel::AsymTwoPoint {
            delta: param,
            sigma,
        },
        "none" => NoiseModel::None,
        other => return Err(format!("unknown noise law {other:?}")),
    };
    model.validate().map_err(|e| e.to_string())?;
    Ok(model)
}

/// `points` samples on `[-x_max, x_max]`, flattened as
/// `x, ρ_τ(x), ψ_τ(x), x²/2` per sample.
pub fn huber_curves_impl(tau: f64, x_max: f64, points: usize) -> Result<Vec<f64>, String> {
    if points < 2 || x_max.is_nan() || x_max <= 0.0 {
        return Err("need at least two points and a positive range".into());
    }
    let mut out = Vec::with_capacity(4 * points);
    for k in 0..points {
        let x = -x_max + 2.0 * x_max * k as f64 / (points - 1) as f64;
        out.push(x);
        out.push(huber_rho(x, tau).map_err(|e| e.to_string())?);
        out.push(psi_tau(x, tau).map_err(|e| e.to_string())?);
        out.push(0.5 * x * x);
    }
    Ok(out)
}

/// Histogram of `draws` samples over `bins` equal cells spanning the
/// central 99% of the draws. Returns `[lo, hi, count_0, …]`.
pub fn noise_histogram_impl(
    kind: &str,
    sigma: f64,
    param: f64,
    draws: usize,
    bins: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    if draws == 0 || bins == 0 {
        return Err("draws and bins must be positive".into());
    }
    let sampler = noise_model(kind, sigma, param)?
        .sampler()
        .map_err(|e| e.to_string())?;
    let mut rng = RngStream::new(seed, 0);
    let mut xs: Vec<f64> = (0..draws).map(|_| sampler.draw(&mut rng)).collect();
    xs.sort_by(f64::total_cmp);
    let q = |f: f64| xs[((draws - 1) as f64 * f).round() as usize];
    let (mut lo, mut hi) = (q(0.005), q(0.995));
    if hi <= lo {
        lo -= 0.5;
        hi += 0.5;
    }
    let mut out = vec![lo, hi];
    out.resize(bins + 2, 0.0);
    let width = (hi - lo) / bins as f64;
    for &x in &xs {
        if (lo..=hi).contains(&x) {
            let k = (((x - lo) / width) as usize).min(bins - 1);
            out[2 + k] += 1.0;
        }
    }
    Ok(out)
}

/// Error trajectories of one Huber run and one least-squares run on the
/// same synthetic instance.
#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct CompletionDemo {
    huber: Vec<f64>,
    least_squares: Vec<f64>,
    tau: f64,
    observed: usize,
}

#[wasm_bindgen]
impl CompletionDemo {
    /// Relative error `‖XYᵀ − M⋆‖_F / ‖M⋆‖_F` per iteration, Huber loss.
    pub fn huber_errors(&self) -> Vec<f64> {
        self.huber.clone()
    }

    /// The same for `τ = ∞`.
    pub fn least_squares_errors(&self) -> Vec<f64> {
        self.least_squares.clone()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn observed(&self) -> usize {
        self.observed
    }
}

/// Synthetic `n × n` rank-`r` completion. Without an explicit `tau` the
/// paper's threshold `τ = 3(‖M⋆‖∞ + σ√(np))` is used.
#[allow(clippy::too_many_arguments)]
pub fn complete_impl(
    n: usize,
    r: usize,
    p: f64,
    kind: &str,
    sigma: f64,
    param: f64,
    tau: Option<f64>,
    iters: usize,
    seed: u64,
) -> Result<CompletionDemo, String> {
    let err = |e: robust_mc::Error| e.to_string();
    let noise = noise_model(kind, sigma, param)?;
    let base = mix_seed(&[seed, n as u64, r as u64]);
    let truth = make_ground_truth(n, r, &mut RngStream::new(base, 0)).map_err(err)?;
    let obs = sample_observations(&truth, p, &noise, &mut RngStream::new(base, 1)).map_err(err)?;
    let tau = match tau {
        Some(t) => HuberParams::new(t).map_err(err)?.tau,
        None => {
            HuberParams::adaptive(3.0, truth.m_star_inf(), sigma, n, p)
                .map_err(err)?
                .tau
        }
    };
    let run = |tau: f64| -> Result<Vec<f64>, String> {
        let mut cfg = GdConfig::new(0.05, tau);
        cfg.max_iters = iters;
        cfg.rel_change_tol = 0.0;
        let init = spectral_initialize(&obs, tau, r).map_err(err)?;
        let trace = gd_run(&init.factors, &obs, &cfg, Some(&truth.m_star)).map_err(err)?;
        Ok(trace.records.iter().filter_map(|p| p.rel_error).collect())
    };
    Ok(CompletionDemo {
        huber: run(tau)?,
        least_squares: run(f64::INFINITY)?,
        tau,
        observed: obs.len(),
    })
}

#[wasm_bindgen]
pub fn huber_curves(tau: f64, x_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    huber_curves_impl(tau, x_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn noise_histogram(
    kind: &str,
    sigma: f64,
    param: f64,
    draws: usize,
    bins: usize,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    noise_histogram_impl(kind, sigma, param, draws, bins, seed as u64).map_err(|e| JsError::new(&e))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn complete(
    n: usize,
    r: usize,
    p: f64,
    kind: &str,
    sigma: f64,
    param: f64,
    tau: Option<f64>,
    iters: usize,
    seed: u32,
) -> Result<CompletionDemo, JsError> {
    complete_impl(n, r, p, kind, sigma, param, tau, iters, seed as u64)
        .map_err(|e| JsError::new(&e))
}

impl CompletionDemo {
    /// Native accessor pair for tests.
    pub fn trajectories(&self) -> (&[f64], &[f64]) {
        (&self.huber, &self.least_squares)
    }
}
