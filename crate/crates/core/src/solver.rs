//! Gradient descent on the Huber objective (standard or leave-one-out).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::spectral_initialize;
use crate::matcore::DenseMatrix;
use crate::metrics::{imbalance, rel_error};
use crate::model::{FactorPair, HuberParams, LeaveOut, LossTerms, ObservationSet};

/// Objective growth over its starting value that counts as divergence.
const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GdMode {
    Standard,
    LeaveOneOut(LeaveOut),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GdConfig {
    pub eta: f64,
    pub max_iters: usize,
    /// Stop once `‖X'Y'ᵀ − XYᵀ‖_F / ‖XYᵀ‖_F` falls to this value.
    pub rel_change_tol: f64,
    pub record_every: usize,
    pub tau: f64,
    pub mode: GdMode,
}

impl GdConfig {
    /// Defaults: 2000 iterations, tolerance `1e-10`, every iterate recorded.
    pub fn new(eta: f64, tau: f64) -> Self {
        Self {
            eta,
            max_iters: 2000,
            rel_change_tol: 1e-10,
            record_every: 1,
            tau,
            mode: GdMode::Standard,
        }
    }

    /// Recording interval by problem size: every iterate up to `n = 500`,
    /// every tenth beyond.
    pub fn default_record_every(n: usize) -> usize {
        if n <= 500 {
            1
        } else {
            10
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::domain(format!(
                "step size must be positive, got {}",
                self.eta
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::domain("max_iters must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(Error::domain("record_every must be at least 1"));
        }
        if self.rel_change_tol.is_nan() || self.rel_change_tol < 0.0 {
            return Err(Error::domain("rel_change_tol must be ≥ 0"));
        }
        HuberParams::new(self.tau).map(|_| ())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iter: usize,
    /// `‖XYᵀ − M⋆‖_F / ‖M⋆‖_F`, present when a ground truth was supplied.
    pub rel_error: Option<f64>,
    pub objective: f64,
    pub imbalance: f64,
    /// Relative change of `XYᵀ` over the step that produced this iterate.
    pub rel_change: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIters,
    Tolerance,
}

#[derive(Clone, Debug)]
pub struct GdTrace {
    pub records: Vec<TracePoint>,
    pub final_factors: FactorPair,
    pub iters_run: usize,
    pub stop_reason: StopReason,
}

impl GdTrace {
    pub fn final_rel_error(&self) -> Option<f64> {
        self.records.last().and_then(|p| p.rel_error)
    }

    /// The record taken at iteration `iter`, if any.
    pub fn at(&self, iter: usize) -> Option<&TracePoint> {
        self.records
            .binary_search_by_key(&iter, |p| p.iter)
            .ok()
            .map(|k| &self.records[k])
    }
}

/// Runs `X ← X − η∇_X f`, `Y ← Y − η∇_Y f` from `init`.
///
/// `truth` is required in leave-one-out mode and enables `rel_error`
/// recording otherwise. Iteration 0 and the final iterate are always
/// recorded.
pub fn gd_run(
    init: &FactorPair,
    obs: &ObservationSet,
    cfg: &GdConfig,
    truth: Option<&DenseMatrix>,
) -> Result<GdTrace> {
    cfg.validate()?;
    let params = HuberParams { tau: cfg.tau };
    let terms = match cfg.mode {
        GdMode::Standard => LossTerms::standard(obs),
        GdMode::LeaveOneOut(leave) => {
            let truth = truth.ok_or_else(|| {
                Error::domain("leave-one-out descent needs the ground-truth matrix")
            })?;
            LossTerms::leave_one_out(obs, truth, leave)?
        }
    };
    if init.x.rows() != obs.n1() || init.y.rows() != obs.n2() {
        return Err(Error::shape(
            "initial factors do not match the observation set",
        ));
    }
    if let Some(t) = truth {
        if t.shape() != (obs.n1(), obs.n2()) {
            return Err(Error::shape(
                "ground truth does not match the observation set",
            ));
        }
    }

    let record = |iter: usize,
                  f: &FactorPair,
                  objective: f64,
                  rel_change: Option<f64>|
     -> Result<TracePoint> {
        Ok(TracePoint {
            iter,
            rel_error: truth.map(|t| rel_error(f, t)).transpose()?,
            objective,
            imbalance: imbalance(f),
            rel_change,
        })
    };

    let mut f = init.clone();
    let (mut value, mut grad) = terms.value_and_gradient(&f, params)?;
    if !value.is_finite() {
        return Err(Error::Divergence {
            iteration: 0,
            message: "non-finite objective at the initial point".into(),
        });
    }
    let limit = DIVERGENCE_FACTOR * value;
    let mut records = vec![record(0, &f, value, None)?];
    let mut stop_reason = StopReason::MaxIters;
    let mut iters_run = 0;

    for t in 1..=cfg.max_iters {
        if is_zero(&grad) {
            stop_reason = StopReason::Tolerance;
            break;
        }
        let step_x = grad.x.scale(-cfg.eta);
        let step_y = grad.y.scale(-cfg.eta);
        f.x.add_scaled(1.0, &step_x)?;
        f.y.add_scaled(1.0, &step_y)?;
        iters_run = t;
        if !f.is_finite() {
            return Err(Error::Divergence {
                iteration: t,
                message: "non-finite iterate".into(),
            });
        }
        let change = relative_change(&f, &step_x, &step_y);
        (value, grad) = terms.value_and_gradient(&f, params)?;
        if !value.is_finite() || (limit > 0.0 && value > limit) {
            return Err(Error::Divergence {
                iteration: t,
                message: format!(
                    "objective {value:.3e} exceeds {DIVERGENCE_FACTOR:e} × its initial value"
                ),
            });
        }
        let converged = change <= cfg.rel_change_tol;
        if converged {
            stop_reason = StopReason::Tolerance;
        }
        if t % cfg.record_every == 0 || converged || t == cfg.max_iters {
            records.push(record(t, &f, value, Some(change))?);
        }
        if converged {
            break;
        }
    }
    if records.last().map(|p| p.iter) != Some(iters_run) {
        records.push(record(iters_run, &f, value, None)?);
    }

    Ok(GdTrace {
        records,
        final_factors: f,
        iters_run,
        stop_reason,
    })
}

fn is_zero(g: &FactorPair) -> bool {
    g.x.as_slice()
        .iter()
        .chain(g.y.as_slice())
        .all(|&v| v == 0.0)
}

/// `‖X'Y'ᵀ − XYᵀ‖_F / ‖XYᵀ‖_F` for `X' = X + ΔX`, `Y' = Y + ΔY`, evaluated
/// through r×r Gram matrices. The difference is `ΔX Y'ᵀ + X ΔYᵀ` with
/// `X = X' − ΔX`.
fn relative_change(updated: &FactorPair, dx: &DenseMatrix, dy: &DenseMatrix) -> f64 {
    let old_x = updated.x.sub(dx).expect("same shape");
    let old_y = updated.y.sub(dy).expect("same shape");
    let p = FactorPair {
        x: dx.clone(),
        y: updated.y.clone(),
    };
    let q = FactorPair {
        x: old_x.clone(),
        y: dy.clone(),
    };
    // ‖A Bᵀ + C Dᵀ‖² = tr(AᵀA BᵀB) + 2 tr(AᵀC DᵀB) + tr(CᵀC DᵀD)
    let gram = |a: &DenseMatrix, b: &DenseMatrix| a.t_matmul(b).expect("same rows");
    let trace_prod = |a: &DenseMatrix, b: &DenseMatrix| -> f64 {
        // tr(a b) for square a, b
        let r = a.rows();
        (0..r)
            .map(|i| (0..r).map(|k| a[(i, k)] * b[(k, i)]).sum::<f64>())
            .sum()
    };
    let num = trace_prod(&gram(&p.x, &p.x), &gram(&p.y, &p.y))
        + 2.0 * trace_prod(&gram(&p.x, &q.x), &gram(&q.y, &p.y))
        + trace_prod(&gram(&q.x, &q.x), &gram(&q.y, &q.y));
    let den = trace_prod(&gram(&old_x, &old_x), &gram(&old_y, &old_y));
    let num = num.max(0.0).sqrt();
    let den = den.max(0.0).sqrt();
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Leave-one-out objective. `l` is one-based in `[1, n1 + n2]`.
pub fn loo_loss_objective(
    f: &FactorPair,
    obs: &ObservationSet,
    truth: &DenseMatrix,
    l: usize,
    tau: f64,
) -> Result<f64> {
    let leave = LeaveOut::from_index(l, obs.n1(), obs.n2())?;
    LossTerms::leave_one_out(obs, truth, leave)?.value(f, HuberParams::new(tau)?)
}

/// Spectral initialization followed by [`gd_run`] in standard mode.
pub fn complete(
    obs: &ObservationSet,
    r: usize,
    cfg: &GdConfig,
    truth: Option<&DenseMatrix>,
) -> Result<GdTrace> {
    let init = spectral_initialize(obs, cfg.tau, r)?;
    gd_run(&init.factors, obs, cfg, truth)
}
