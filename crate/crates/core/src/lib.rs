//! Nonparametric estimation and inference for the heteroscedastic spatial
//! regression model `Y(s) = μ(X(s)) + σ(X(s))·V(s)` observed at irregular
//! sites, with a seeded simulation harness.
//!
//! * [`kernel`]: compact kernels and their integral constants
//! * [`estimators`]: density, Nadaraya–Watson, jackknife mean, conditional variance, `V̂₄`
//! * [`inference`]: normalised scores, max-normal quantile, joint bands
//! * [`bandwidth`]: adjacent-distance bandwidth rule
//! * [`dgp`]: lattice sampling, spatial moving-average covariate, responses
//! * [`montecarlo`]: replication experiments

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandwidth;
pub mod dgp;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod inference;
pub mod io;
pub mod kernel;
pub mod montecarlo;
pub mod normal;
pub mod stats;

pub use error::{Error, Result};
pub use estimators::{CurveEstimate, Estimator, SpatialDataset};
pub use kernel::{Kernel, KernelConstants};
