//! Intensity inference for Cox processes using a piecewise-linear, finite-dimensional
//! Gaussian-process approximation on which linear inequality constraints hold exactly.
//!
//! The intensity is represented by its values `ξ` at an equispaced (tensor) knot grid and
//! interpolated with hat basis functions. Because the interpolant is piecewise multilinear,
//! non-negativity, monotonicity, convexity and bounds at the knots carry over to the whole
//! domain, so they become a finite set of halfspaces on `ξ`. Posterior sampling uses a
//! Metropolis–Hastings chain whose proposals are Gaussians truncated to the constraint region,
//! drawn with exact Hamiltonian Monte Carlo.
//!
//! Module map:
//!
//! - [`kernel`]: squared-exponential covariance and covariance matrices with jitter.
//! - [`finite_gp`]: knot grids, hat basis, intensity evaluation and integration weights.
//! - [`constraints`]: halfspace systems built from named constraint kinds.
//! - [`tmvn`]: truncated Gaussian sampling and Gaussian region probabilities.
//! - [`cox`]: likelihood, posterior, the MH sampler, summaries and hyperparameter search.
//! - [`point_process`]: reference intensities, hazard functions and thinning simulation.
//! - [`metrics`]: Q², acceptance rate and effective sample size.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constraints;
pub mod cox;
pub mod error;
pub mod finite_gp;
pub mod kernel;
pub mod metrics;
pub mod normal;
pub mod point_process;
pub mod rng;
pub mod special;
pub mod tmvn;

pub use constraints::{ConstraintKind, ConstraintSpec, ConstraintSystem, Halfspace};
pub use cox::{MhConfig, PointPattern, PosteriorChain};
pub use error::{Error, Result};
pub use finite_gp::{CoefficientSample, IntegrationWeights, KnotGrid};
pub use kernel::{CovarianceMatrix, KernelParams};
