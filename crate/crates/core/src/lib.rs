//! Robust low-rank matrix completion under heavy-tailed noise.
//!
//! The estimator runs in two stages: a truncated (Winsorized) spectral
//! initialization, then gradient descent on a balanced factorization
//! `M = X Yᵀ` with an adaptive Huber data term and the regularizer
//! `(1/8)‖XᵀX − YᵀY‖²_F`.
//!
//! Module map:
//! - [`matcore`]: dense matrices, norms, SVD kernels, seeded RNG streams.
//! - [`model`]: Huber loss, truncation operator, objective and gradients.
//! - [`init`]: spectral initialization and its leave-one-out variant.
//! - [`solver`]: the gradient-descent loop (standard and leave-one-out).
//! - [`metrics`]: Procrustes alignment, error metrics, incoherence.
//! - [`synth`]: synthetic ground truth, noise laws, Bernoulli sampling.
//! - [`bench`]: experiment presets, trial orchestration, CSV/JSON output.

pub mod bench;
pub mod error;
pub mod init;
pub mod matcore;
pub mod metrics;
pub mod model;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
pub use matcore::{DenseMatrix, RngStream};
pub use model::{FactorPair, HuberParams, ObservationSet, Sample};
