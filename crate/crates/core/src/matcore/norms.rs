use super::{svd, DenseMatrix};
use crate::error::{Error, Result};

fn nonempty(a: &DenseMatrix) -> Result<()> {
    if a.is_empty() {
        return Err(Error::domain("norm of an empty matrix"));
    }
    Ok(())
}

/// Frobenius norm.
pub fn frob_norm(a: &DenseMatrix) -> Result<f64> {
    nonempty(a)?;
    Ok(a.sum_sq().sqrt())
}

/// Largest row ℓ₂ norm (the ℓ₂/ℓ∞ norm).
pub fn two_inf_norm(a: &DenseMatrix) -> Result<f64> {
    nonempty(a)?;
    Ok((0..a.rows())
        .map(|i| a.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max))
}

/// Largest entry magnitude.
pub fn inf_norm(a: &DenseMatrix) -> Result<f64> {
    nonempty(a)?;
    Ok(a.as_slice().iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Largest singular value.
pub fn spectral_norm(a: &DenseMatrix) -> Result<f64> {
    nonempty(a)?;
    Ok(svd(a)?.s[0])
}
