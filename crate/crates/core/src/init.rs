//! Robust spectral initialization.
//!
//! The data matrix `M⁰ = p⁻¹ P_Ω(ψ_τ(M))` is truncated entry-wise, rescaled
//! by the nominal rate, and its top-r SVD is split into balanced factors
//! `X⁰ = U⁰ (Σ⁰)^{1/2}`, `Y⁰ = V⁰ (Σ⁰)^{1/2}`.

use crate::error::{Error, Result};
use crate::matcore::svd::truncated_svd;
use crate::matcore::DenseMatrix;
use crate::model::{psi, FactorPair, LeaveOut, ObservationSet};

#[derive(Clone, Debug)]
pub struct SpectralInit {
    pub u0: DenseMatrix,
    pub sigma0: Vec<f64>,
    pub v0: DenseMatrix,
    pub factors: FactorPair,
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "truncation level must be positive, got {tau}"
        )))
    }
}

/// `p⁻¹ P_Ω(ψ_τ(M))` as a dense matrix. `tau = +∞` skips truncation.
pub fn truncated_data_matrix(obs: &ObservationSet, tau: f64) -> Result<DenseMatrix> {
    check_tau(tau)?;
    let inv_p = 1.0 / obs.rate_p();
    let mut m = DenseMatrix::zeros(obs.n1(), obs.n2());
    for s in obs.samples() {
        m[(s.i, s.j)] = inv_p * psi(s.value, tau);
    }
    Ok(m)
}

/// Truncated data matrix with one line replaced by the ground truth.
///
/// Off the left-out line the entries equal [`truncated_data_matrix`]; the
/// left-out row (or column) is copied from `truth` without rescaling.
pub fn loo_data_matrix(
    obs: &ObservationSet,
    truth: &DenseMatrix,
    leave: LeaveOut,
    tau: f64,
) -> Result<DenseMatrix> {
    check_tau(tau)?;
    if truth.shape() != (obs.n1(), obs.n2()) {
        return Err(Error::shape(format!(
            "ground truth {}x{} vs observations {}x{}",
            truth.rows(),
            truth.cols(),
            obs.n1(),
            obs.n2()
        )));
    }
    leave.check(obs.n1(), obs.n2())?;
    let inv_p = 1.0 / obs.rate_p();
    let mut m = DenseMatrix::zeros(obs.n1(), obs.n2());
    for s in obs.samples().iter().filter(|s| !leave.excludes(s.i, s.j)) {
        m[(s.i, s.j)] = inv_p * psi(s.value, tau);
    }
    match leave {
        LeaveOut::Row(l) => m.row_mut(l).copy_from_slice(truth.row(l)),
        LeaveOut::Column(l) => {
            for i in 0..obs.n1() {
                m[(i, l)] = truth[(i, l)];
            }
        }
    }
    Ok(m)
}

/// Leading `r` singular triplets, with each `(uᵢ, vᵢ)` pair signed so that
/// the largest-magnitude entry of `uᵢ` is positive.
pub fn top_r_svd(m: &DenseMatrix, r: usize) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let d = m.rows().min(m.cols());
    if r == 0 || r > d {
        return Err(Error::shape(format!(
            "rank {r} out of range for a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let svd = truncated_svd(m, r)?;
    let (mut u, s, mut v) = (svd.u, svd.s, svd.v);
    for j in 0..r {
        let mut pivot = 0;
        for i in 1..u.rows() {
            if u[(i, j)].abs() > u[(pivot, j)].abs() {
                pivot = i;
            }
        }
        if u[(pivot, j)] < 0.0 {
            for i in 0..u.rows() {
                u[(i, j)] = -u[(i, j)];
            }
            for i in 0..v.rows() {
                v[(i, j)] = -v[(i, j)];
            }
        }
    }
    Ok((u, s, v))
}

/// Top-r SVD of `m` followed by the balanced square-root split.
pub fn balanced_split(m: &DenseMatrix, r: usize) -> Result<SpectralInit> {
    let (u0, sigma0, v0) = top_r_svd(m, r)?;
    let roots: Vec<f64> = sigma0.iter().map(|s| s.sqrt()).collect();
    let factors = FactorPair::new(u0.scale_columns(&roots)?, v0.scale_columns(&roots)?)?;
    Ok(SpectralInit {
        u0,
        sigma0,
        v0,
        factors,
    })
}

/// Spectral initialization from the truncated data matrix.
pub fn spectral_initialize(obs: &ObservationSet, tau: f64, r: usize) -> Result<SpectralInit> {
    balanced_split(&truncated_data_matrix(obs, tau)?, r)
}

/// Leave-one-out spectral initialization. `l` is one-based in
/// `[1, n1 + n2]`; see [`LeaveOut::from_index`].
pub fn loo_initialize(
    obs: &ObservationSet,
    truth: &DenseMatrix,
    l: usize,
    tau: f64,
    r: usize,
) -> Result<SpectralInit> {
    let leave = LeaveOut::from_index(l, obs.n1(), obs.n2())?;
    balanced_split(&loo_data_matrix(obs, truth, leave, tau)?, r)
}
