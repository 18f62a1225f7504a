//! Gaussians restricted to polyhedral regions.
//!
//! [`hmc`] draws from `N(mean, Σ)` conditioned on a halfspace system with the exact
//! (bouncing) Hamiltonian Monte Carlo sampler. [`region`] estimates the probability mass
//! that a Gaussian places on such a region; for the positive orthant this is the
//! normaliser ratio used in the truncated-proposal acceptance step.

pub mod hmc;
pub mod region;

pub use hmc::{sample_tmvn_hmc, HmcSampler, TmvnProblem, DEFAULT_BOUNCE_CAP, DEFAULT_TRAVEL_TIME};
pub use region::{orthant_log_probability, proposal_log_ratio, OrthantEstimate, RegionProbability};
