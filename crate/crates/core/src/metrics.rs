//! Alignment modulo rotation, error metrics and structural diagnostics.

use crate::error::{Error, Result};
use crate::matcore::{frob_norm, spectral_norm, svd, two_inf_norm, DenseMatrix};
use crate::model::FactorPair;

/// Errors of a factor stack after optimal orthogonal alignment.
#[derive(Clone, Debug)]
pub struct AlignedError {
    pub rotation: DenseMatrix,
    pub frob_err: f64,
    pub spectral_err: f64,
    pub two_inf_err: f64,
}

/// Orthogonal polar factor `U Vᵀ` of a square matrix.
///
/// For singular input the SVD's `U Vᵀ` is still returned; it is orthonormal
/// but no longer unique.
pub fn sgn_polar(r_mat: &DenseMatrix) -> Result<DenseMatrix> {
    if r_mat.rows() != r_mat.cols() {
        return Err(Error::shape(format!(
            "polar factor of a non-square {}x{} matrix",
            r_mat.rows(),
            r_mat.cols()
        )));
    }
    let d = svd(r_mat)?;
    d.u.matmul_t(&d.v)
}

/// Rotates `f` onto `truth_f` with `H = sgn(Fᵀ F⋆)` on the stacks
/// `F = [X; Y]` and measures the residual `F H − F⋆`.
pub fn align(f: &FactorPair, truth_f: &FactorPair) -> Result<AlignedError> {
    if f.x.shape() != truth_f.x.shape() || f.y.shape() != truth_f.y.shape() {
        return Err(Error::shape("factor pairs to align differ in shape"));
    }
    let stack = f.stacked();
    let truth = truth_f.stacked();
    let rotation = sgn_polar(&stack.t_matmul(&truth)?)?;
    let residual = stack.matmul(&rotation)?.sub(&truth)?;
    Ok(AlignedError {
        rotation,
        frob_err: frob_norm(&residual)?,
        spectral_err: spectral_norm(&residual)?,
        two_inf_err: two_inf_norm(&residual)?,
    })
}

/// Smallest `μ` with `‖U‖_{2,∞} ≤ √(μ r / n)`, i.e. `n ‖U‖²_{2,∞} / r`.
pub fn incoherence_mu(u: &DenseMatrix) -> Result<f64> {
    let (n, r) = u.shape();
    if n == 0 || r == 0 {
        return Err(Error::domain("incoherence of an empty basis"));
    }
    let gram = u.t_matmul(u)?;
    let dev = gram.sub(&DenseMatrix::identity(r))?;
    let dev = frob_norm(&dev)?;
    if dev > 1e-6 {
        return Err(Error::domain(format!(
            "columns are not orthonormal (Gram deviation {dev:.3e})"
        )));
    }
    let row = two_inf_norm(u)?;
    Ok(n as f64 * row * row / r as f64)
}

/// `‖XᵀX − YᵀY‖_F`.
pub fn imbalance(f: &FactorPair) -> f64 {
    f.gram_difference().sum_sq().sqrt()
}

/// `‖X Yᵀ − M⋆‖_F / ‖M⋆‖_F`.
pub fn rel_error(f: &FactorPair, truth: &DenseMatrix) -> Result<f64> {
    let diff = f.product().sub(truth)?;
    Ok(frob_norm(&diff)? / frob_norm(truth)?)
}
