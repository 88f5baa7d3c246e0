//! Dense linear-algebra kernels, norms, SVD and seeded random streams.

mod matrix;
mod norms;
mod rng;
pub mod svd;
mod text;

pub use matrix::DenseMatrix;
pub use norms::{frob_norm, inf_norm, spectral_norm, two_inf_norm};
pub use rng::{mix_seed, RngStream};
pub use svd::{svd, Svd};
