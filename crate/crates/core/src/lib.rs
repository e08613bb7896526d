//! Hyperspectral unmixing under the augmented linear mixing model.
//!
//! Observed pixels are modeled as `y_k = S_k·(A x_k) + E b_k + r_k`: a
//! per-pixel scaled mixture of the endmember signatures `A` plus a learned
//! spectral-variability dictionary `E`. The crate provides the pixel-wise
//! ADMM unmixer for a fixed `E` ([`su`]), joint dictionary learning
//! ([`svdl`]), the classical least-squares and sparse baselines
//! ([`baselines`]), a synthetic scene generator ([`synthetic`]) and the
//! evaluation metrics ([`metrics`]).

pub mod baselines;
pub mod error;
pub mod io;
mod linalg;
pub mod metrics;
pub mod model;
pub mod nnls;
mod output;
pub mod su;
pub mod svdl;
pub mod synthetic;

pub use error::{Error, Result};
pub use output::{PixelStatus, Unmixing};
