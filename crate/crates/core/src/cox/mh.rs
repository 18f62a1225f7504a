use rand::Rng;

use super::{CoxPosterior, PointPattern};
use crate::constraints::ConstraintSystem;
use crate::error::{Error, Result};
use crate::finite_gp::{check_len, CoefficientSample, KnotGrid};
use crate::kernel::{CovarianceMatrix, KernelParams};
use crate::rng::seeded;
use crate::tmvn::{HmcSampler, RegionProbability};

/// Settings of the Metropolis–Hastings sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct MhConfig {
    /// Proposal covariance is `eta · Γ`.
    pub eta: f64,
    /// Retained samples after burn-in.
    pub n_samples: usize,
    pub burn_in: usize,
    /// Monte Carlo draws for each region-probability estimate in the acceptance ratio.
    pub orthant_mc: usize,
    pub seed: u64,
    pub init: Option<CoefficientSample>,
    /// HMC trajectories run from the current state to draw each truncated proposal.
    pub proposal_steps: usize,
}

impl Default for MhConfig {
    fn default() -> Self {
        Self { eta: 1e-3, n_samples: 10_000, burn_in: 1_000, orthant_mc: 200, seed: 0, init: None, proposal_steps: 5 }
    }
}

impl MhConfig {
    fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::ParameterDomain(format!("eta must be positive, got {}", self.eta)));
        }
        if self.n_samples == 0 {
            return Err(Error::ParameterDomain("n_samples must be at least 1".into()));
        }
        if self.orthant_mc < 2 {
            return Err(Error::ParameterDomain("orthant_mc must be at least 2".into()));
        }
        if self.proposal_steps == 0 {
            return Err(Error::ParameterDomain("proposal_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Output of [`mh_infer`].
#[derive(Debug, Clone)]
pub struct PosteriorChain {
    /// Retained states, burn-in removed.
    pub samples: Vec<CoefficientSample>,
    /// Acceptance decision of every step, burn-in included.
    pub accepted: Vec<bool>,
    pub burn_in: usize,
    pub config: MhConfig,
    pub grid: KnotGrid,
    pub params: KernelParams,
}

impl PosteriorChain {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Componentwise mean of the retained samples.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.samples.len().max(1) as f64;
        let mut m = vec![0.0; self.grid.size()];
        for s in &self.samples {
            for (a, b) in m.iter_mut().zip(&s.0) {
                *a += b / n;
            }
        }
        m
    }
}

/// Starting state used when none is configured: the constraint system's interior point at
/// the empirical rate `total events / (N_o · volume)` (or `0.1 σ` when there are no events).
pub fn default_init(
    pattern: &PointPattern,
    grid: &KnotGrid,
    system: &ConstraintSystem,
    params: &KernelParams,
) -> Result<Vec<f64>> {
    let rate = pattern.total_events() as f64 / (pattern.n_observations() as f64 * grid.volume());
    let level = if rate > 0.0 { rate } else { 0.1 * params.std_dev() };
    system.interior_point(level)
}

/// Metropolis–Hastings with Gaussian proposals `N(χᵏ, ηΓ)` truncated to the constraint region.
///
/// Each proposal is drawn by exact HMC started at `χᵏ`. The acceptance ratio is the
/// posterior ratio times `Z(χᵏ) / Z(χ')`, where `Z(μ)` is the mass of `N(μ, ηΓ)` on the
/// region, estimated with fresh Monte Carlo draws every step.
pub fn mh_infer(
    pattern: &PointPattern,
    grid: &KnotGrid,
    system: &ConstraintSystem,
    params: &KernelParams,
    config: &MhConfig,
) -> Result<PosteriorChain> {
    config.validate()?;
    let covariance = CovarianceMatrix::new(grid, params)?;
    let posterior = CoxPosterior::new(pattern, grid, &covariance, system)?;
    let proposal = covariance.scaled(config.eta);
    let sampler = HmcSampler::new(&proposal, system)?;
    let region = RegionProbability::new(proposal.matrix(), system)?;

    let mut current = match &config.init {
        Some(init) => {
            check_len(init.len(), grid.size())?;
            init.0.clone()
        }
        None => default_init(pattern, grid, system, params)?,
    };
    let margin = system.min_margin(&current)?;
    if !system.is_empty() && margin < -super::constraint_tolerance(&covariance) {
        return Err(Error::Infeasible(format!("initial state violates the constraints (margin {margin:e})")));
    }
    let mut current_lp = posterior.log_density(&current);

    let mut rng = seeded(config.seed);
    let total = config.burn_in + config.n_samples;
    let mut samples = Vec::with_capacity(config.n_samples);
    let mut accepted = Vec::with_capacity(total);
    for step in 0..total {
        let candidate = sampler.sample_last(&current, &current, config.proposal_steps, &mut rng)?;
        let mc_seed: u64 = rng.random();
        let u: f64 = rng.random();
        let candidate_lp = posterior.log_density(&candidate);
        let accept = if candidate_lp == f64::NEG_INFINITY {
            false
        } else if current_lp == f64::NEG_INFINITY {
            true
        } else {
            let log_beta = region.log_ratio(&current, &candidate, config.orthant_mc, mc_seed)?;
            let log_alpha = candidate_lp - current_lp + log_beta;
            if log_alpha.is_nan() {
                return Err(Error::Divergence(format!("acceptance ratio is NaN at step {step}")));
            }
            u.ln() < log_alpha
        };
        if accept {
            current = candidate;
            current_lp = candidate_lp;
        }
        accepted.push(accept);
        if step >= config.burn_in {
            samples.push(CoefficientSample(current.clone()));
        }
    }

    Ok(PosteriorChain {
        samples,
        accepted,
        burn_in: config.burn_in,
        config: config.clone(),
        grid: grid.clone(),
        params: params.clone(),
    })
}
