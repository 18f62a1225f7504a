use std::cell::RefCell;

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use rand::Rng;

use super::{CoxPosterior, PointPattern};
use crate::constraints::ConstraintSystem;
use crate::error::{Error, Result};
use crate::finite_gp::KnotGrid;
use crate::kernel::{CovarianceMatrix, KernelParams};
use crate::rng::{seeded, substream};
use crate::tmvn::HmcSampler;

/// HMC trajectories discarded before the prior draws used by the marginal likelihood.
const PRIOR_BURN_IN: usize = 10;
/// Knots per lengthscale in [`default_knot_counts`], and the per-dimension cap.
const KNOTS_PER_LENGTHSCALE: f64 = 10.0;
const MAX_AUTO_KNOTS: usize = 200;

/// Box bounds and effort for [`estimate_hyperparams`].
#[derive(Debug, Clone, PartialEq)]
pub struct HyperSearch {
    pub variance: (f64, f64),
    pub lengthscales: Vec<(f64, f64)>,
    /// Total simplex iterations over all starts.
    pub budget: usize,
    /// Prior draws per marginal-likelihood evaluation.
    pub n_prior: usize,
    pub starts: usize,
}

impl HyperSearch {
    pub fn new(variance: (f64, f64), lengthscales: Vec<(f64, f64)>) -> Self {
        Self { variance, lengthscales, budget: 60, n_prior: 200, starts: 3 }
    }

    fn log_bounds(&self) -> Result<Vec<(f64, f64)>> {
        std::iter::once(self.variance)
            .chain(self.lengthscales.iter().copied())
            .map(|(lo, hi)| {
                if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                    Err(Error::ParameterDomain(format!("invalid search bounds ({lo}, {hi})")))
                } else {
                    Ok((lo.ln(), hi.ln()))
                }
            })
            .collect()
    }
}

/// `mᵢ = ⌈10 · (bᵢ − aᵢ) / ℓᵢ⌉`, clamped to `[2, 200]`.
pub fn default_knot_counts(domain: &[(f64, f64)], lengthscales: &[f64]) -> Result<Vec<usize>> {
    if domain.len() != lengthscales.len() {
        return Err(Error::Shape(format!("{} domain intervals but {} lengthscales", domain.len(), lengthscales.len())));
    }
    domain
        .iter()
        .zip(lengthscales)
        .map(|(&(a, b), &l)| {
            if !(l > 0.0 && b > a) {
                return Err(Error::ParameterDomain(format!("need b > a and ℓ > 0, got [{a}, {b}], ℓ = {l}")));
            }
            let m = (KNOTS_PER_LENGTHSCALE * (b - a) / l).ceil();
            Ok((m.min(MAX_AUTO_KNOTS as f64) as usize).max(2))
        })
        .collect()
}

/// Monte Carlo log marginal likelihood `log (1/K) Σₖ exp(ℓ(ξₖ))` with `ξₖ` drawn from the
/// prior truncated to `system`. Reusing `seed` across parameter values gives common random
/// numbers.
pub fn marginal_log_likelihood(
    pattern: &PointPattern,
    grid: &KnotGrid,
    system: &ConstraintSystem,
    params: &KernelParams,
    n_prior: usize,
    seed: u64,
) -> Result<f64> {
    if n_prior == 0 {
        return Err(Error::ParameterDomain("need at least one prior draw".into()));
    }
    let covariance = CovarianceMatrix::new(grid, params)?;
    let posterior = CoxPosterior::new(pattern, grid, &covariance, system)?;
    let sampler = HmcSampler::new(&covariance, system)?;
    let init = system.interior_point(0.1 * params.std_dev())?;
    let zero = vec![0.0; grid.size()];
    let mut rng = seeded(seed);
    let draws = sampler.sample(&zero, &init, PRIOR_BURN_IN + n_prior, &mut rng)?;
    let lls: Vec<f64> = draws[PRIOR_BURN_IN..].iter().map(|xi| posterior.log_likelihood_pooled(&xi.0)).collect();
    Ok(log_mean_exp(&lls))
}

fn log_mean_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + (v.iter().map(|x| (x - max).exp()).sum::<f64>() / v.len() as f64).ln()
}

/// Exhaustive search over `candidates`; returns the winning index and every objective value.
pub fn select_hyperparams(
    pattern: &PointPattern,
    grid: &KnotGrid,
    system: &ConstraintSystem,
    candidates: &[KernelParams],
    n_prior: usize,
    seed: u64,
) -> Result<(usize, Vec<f64>)> {
    let values = candidates
        .iter()
        .map(|p| marginal_log_likelihood(pattern, grid, system, p, n_prior, seed))
        .collect::<Result<Vec<_>>>()?;
    let best = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::EstimationFailure("every candidate has zero marginal likelihood".into()))?;
    Ok((best, values))
}

/// Maximises [`marginal_log_likelihood`] over `(σ², ℓ₁…ℓ_d)` inside the search box using
/// Nelder–Mead on log-parameters from several starts (the box centre first).
pub fn estimate_hyperparams(
    pattern: &PointPattern,
    grid: &KnotGrid,
    system: &ConstraintSystem,
    search: &HyperSearch,
    seed: u64,
) -> Result<KernelParams> {
    if search.lengthscales.len() != grid.dim() {
        return Err(Error::Shape(format!(
            "{} lengthscale bounds for a {}-dimensional grid",
            search.lengthscales.len(),
            grid.dim()
        )));
    }
    if search.budget == 0 || search.starts == 0 {
        return Err(Error::ParameterDomain("budget and starts must be at least 1".into()));
    }
    let bounds = search.log_bounds()?;
    let objective = Objective {
        pattern,
        grid,
        system,
        bounds: &bounds,
        n_prior: search.n_prior,
        seed: substream(seed, 0),
        best: RefCell::new((f64::NEG_INFINITY, Vec::new())),
    };

    let centre: Vec<f64> = bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    let free: Vec<usize> = (0..bounds.len()).filter(|&i| bounds[i].1 > bounds[i].0).collect();
    objective.eval(&centre)?;
    let starts = search.starts.min(search.budget);
    if !free.is_empty() && search.budget > 1 {
        let mut rng = seeded(substream(seed, 1));
        let per_start = (search.budget / starts).max(1) as u64;
        for s in 0..starts {
            let start: Vec<f64> = if s == 0 {
                centre.clone()
            } else {
                bounds.iter().map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>()).collect()
            };
            let mut simplex = vec![start.clone()];
            for &i in &free {
                let mut v = start.clone();
                let step = 0.25 * (bounds[i].1 - bounds[i].0);
                v[i] += if v[i] + step <= bounds[i].1 { step } else { -step };
                simplex.push(v);
            }
            let solver = NelderMead::new(simplex)
                .with_sd_tolerance(1e-3)
                .map_err(|e| Error::EstimationFailure(e.to_string()))?;
            Executor::new(&objective, solver)
                .configure(|state| state.max_iters(per_start))
                .run()
                .map_err(|e| Error::EstimationFailure(e.to_string()))?;
        }
    }

    let (value, best) = objective.best.into_inner();
    if value == f64::NEG_INFINITY {
        return Err(Error::EstimationFailure("every evaluated candidate has zero marginal likelihood".into()));
    }
    KernelParams::new(best[0].exp(), best[1..].iter().map(|v| v.exp()).collect())
}

struct Objective<'a> {
    pattern: &'a PointPattern,
    grid: &'a KnotGrid,
    system: &'a ConstraintSystem,
    bounds: &'a [(f64, f64)],
    n_prior: usize,
    seed: u64,
    /// Best `(value, log-parameters)` seen so far.
    best: RefCell<(f64, Vec<f64>)>,
}

impl Objective<'_> {
    fn eval(&self, log_params: &[f64]) -> Result<f64> {
        let clamped: Vec<f64> = log_params.iter().zip(self.bounds).map(|(v, &(lo, hi))| v.clamp(lo, hi)).collect();
        let params = KernelParams::new(clamped[0].exp(), clamped[1..].iter().map(|v| v.exp()).collect())?;
        let value = marginal_log_likelihood(self.pattern, self.grid, self.system, &params, self.n_prior, self.seed)?;
        let mut best = self.best.borrow_mut();
        if value > best.0 || best.1.is_empty() {
            *best = (value, clamped);
        }
        Ok(value)
    }
}

impl CostFunction for &Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let v = self.eval(p).map_err(|e| argmin::core::Error::msg(e.to_string()))?;
        // Points outside the box are clamped for evaluation and penalised for the simplex.
        let outside: f64 = p.iter().zip(self.bounds).map(|(v, &(lo, hi))| (lo - v).max(0.0) + (v - hi).max(0.0)).sum();
        Ok(if v.is_finite() { -v + 1e3 * outside } else { f64::MAX })
    }
}
