//! Ornstein-Uhlenbeck diffusions on the manifold of symmetric positive-definite
//! matrices, under the Euclidean, Log-Euclidean and Affine-Invariant metrics.
//!
//! The crate covers the full pipeline: matrix-function kernels and manifold
//! geometry, exponential-adapted Euler-Maruyama path simulation, guided
//! diffusion-bridge sampling, Bayesian parameter inference by MCMC data
//! augmentation, realized-covariance ingestion from intraday prices, and
//! goodness-of-fit via generalized residuals.

pub mod bridge;
pub mod error;
pub mod geometry;
pub mod gof;
pub mod inference;
pub mod marketdata;
pub mod rng;
pub mod sde;
pub mod symkernel;

pub use error::{Error, Result};
pub use geometry::{Frame, MetricKind, TangentVector};
pub use marketdata::ObservationSeries;
pub use sde::{NoiseBank, OuParams, SdePath, SimGrid};
pub use symkernel::{DuplicationMatrix, SpdMatrix, SymBasis, SymMatrix};
