//! Cox-process likelihood and posterior over the knot coefficients, the Metropolis–Hastings
//! sampler, posterior summaries and hyperparameter search.
//!
//! All log-likelihoods omit the `−log n!` term, which does not depend on `ξ` or on the
//! kernel hyperparameters.

mod hyper;
mod mh;
mod summary;

pub use hyper::{default_knot_counts, estimate_hyperparams, marginal_log_likelihood, select_hyperparams, HyperSearch};
pub use mh::{default_init, mh_infer, MhConfig, PosteriorChain};
pub use summary::{posterior_intensity, IntensitySummary};

use crate::constraints::ConstraintSystem;
use crate::error::{Error, Result};
use crate::finite_gp::{check_len, integration_weights, intensity_measure, IntegrationWeights, KnotGrid};
use crate::kernel::CovarianceMatrix;

/// One or more independent realisations of a point process on a common domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    observations: Vec<Vec<Vec<f64>>>,
}

impl PointPattern {
    /// Each observation is a list of events; each event a coordinate vector.
    pub fn new(observations: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::ParameterDomain("a point pattern needs at least one observation".into()));
        }
        let mut dim = None;
        for x in observations.iter().flatten() {
            if x.is_empty() || x.iter().any(|v| !v.is_finite()) {
                return Err(Error::ParameterDomain(format!("invalid event coordinates {x:?}")));
            }
            match dim {
                None => dim = Some(x.len()),
                Some(d) if d != x.len() => {
                    return Err(Error::Shape(format!("events of dimension {d} and {} mixed", x.len())))
                }
                _ => {}
            }
        }
        Ok(Self { observations })
    }

    /// `n_obs` empty observations.
    pub fn empty(n_obs: usize) -> Result<Self> {
        Self::new(vec![Vec::new(); n_obs])
    }

    pub fn observations(&self) -> &[Vec<Vec<f64>>] {
        &self.observations
    }

    pub fn n_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn total_events(&self) -> usize {
        self.observations.iter().map(Vec::len).sum()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.observations.iter().map(Vec::len).collect()
    }

    /// Event dimension, or `None` when every observation is empty.
    pub fn dim(&self) -> Option<usize> {
        self.observations.iter().flatten().next().map(Vec::len)
    }

    pub fn events(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.observations.iter().flatten()
    }

    fn check_grid(&self, grid: &KnotGrid) -> Result<()> {
        for x in self.events() {
            grid.check_point(x)?;
        }
        Ok(())
    }
}

/// `−Σ cⱼξⱼ + Σᵢ log Λ_m(xᵢ)` for a single observation; `−∞` if `Λ_m` vanishes at an event.
pub fn log_likelihood(
    coeffs: &[f64],
    events: &[Vec<f64>],
    grid: &KnotGrid,
    weights: &IntegrationWeights,
) -> Result<f64> {
    check_len(coeffs.len(), grid.size())?;
    let mut ll = -intensity_measure(coeffs, weights)?;
    for x in events {
        let lam: f64 = grid.basis_support(x)?.iter().map(|&(j, w)| w * coeffs[j]).sum();
        if !(lam > 0.0) {
            return Ok(f64::NEG_INFINITY);
        }
        ll += lam.ln();
    }
    Ok(ll)
}

/// `−½ ξᵀΓ⁻¹ξ + Σ_ν log_likelihood(ξ, obs_ν)`, or `−∞` when `ξ` violates `system` by more
/// than `1e-9·σ`. The truncated-prior normaliser is omitted.
pub fn log_unnormalized_posterior(
    coeffs: &[f64],
    pattern: &PointPattern,
    grid: &KnotGrid,
    weights: &IntegrationWeights,
    covariance: &CovarianceMatrix,
    system: &ConstraintSystem,
) -> Result<f64> {
    let post = CoxPosterior::new(pattern, grid, covariance, system)?;
    check_len(weights.0.len(), grid.size())?;
    Ok(post.log_density_with(coeffs, weights))
}

/// Precomputed pieces of the posterior for repeated evaluation.
pub(crate) struct CoxPosterior<'a> {
    covariance: &'a CovarianceMatrix,
    system: &'a ConstraintSystem,
    weights: IntegrationWeights,
    n_obs: f64,
    /// Basis support of every event, all observations pooled.
    supports: Vec<Vec<(usize, f64)>>,
    tolerance: f64,
}

impl<'a> CoxPosterior<'a> {
    pub(crate) fn new(
        pattern: &PointPattern,
        grid: &KnotGrid,
        covariance: &'a CovarianceMatrix,
        system: &'a ConstraintSystem,
    ) -> Result<Self> {
        check_len(covariance.dim(), grid.size())?;
        check_len(system.dim(), grid.size())?;
        pattern.check_grid(grid)?;
        let supports = pattern.events().map(|x| grid.basis_support(x)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            covariance,
            system,
            weights: integration_weights(grid),
            n_obs: pattern.n_observations() as f64,
            supports,
            tolerance: constraint_tolerance(covariance),
        })
    }

    pub(crate) fn log_density(&self, xi: &[f64]) -> f64 {
        self.log_density_with(xi, &self.weights)
    }

    fn log_density_with(&self, xi: &[f64], weights: &IntegrationWeights) -> f64 {
        if self.system.halfspaces().iter().any(|h| h.value(xi) < -self.tolerance) {
            return f64::NEG_INFINITY;
        }
        let ll = self.log_likelihood_with(xi, weights);
        if ll == f64::NEG_INFINITY {
            return ll;
        }
        -0.5 * self.covariance.inv_quad_form(xi) + ll
    }

    /// `−N_o cᵀξ + Σ log Λ(x)` over all events.
    pub(crate) fn log_likelihood_pooled(&self, xi: &[f64]) -> f64 {
        self.log_likelihood_with(xi, &self.weights)
    }

    fn log_likelihood_with(&self, xi: &[f64], weights: &IntegrationWeights) -> f64 {
        let mu: f64 = weights.0.iter().zip(xi).map(|(c, x)| c * x).sum();
        let mut ll = -self.n_obs * mu;
        for s in &self.supports {
            let lam: f64 = s.iter().map(|&(j, w)| w * xi[j]).sum();
            if !(lam > 0.0) {
                return f64::NEG_INFINITY;
            }
            ll += lam.ln();
        }
        ll
    }
}

/// Constraint slack `1e-9·σ` used when checking samples.
pub fn constraint_tolerance(covariance: &CovarianceMatrix) -> f64 {
    let var = covariance.matrix().diagonal().iter().fold(0.0f64, |a, &b| a.max(b));
    1e-9 * var.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{build_constraint_system, ConstraintSpec};
    use crate::kernel::KernelParams;
    use approx::assert_relative_eq;

    fn unit_grid(m: usize) -> KnotGrid {
        KnotGrid::new(&[(0.0, 1.0)], &[m]).unwrap()
    }

    #[test]
    fn likelihood_examples() {
        let g = unit_grid(2);
        let w = integration_weights(&g);
        assert_relative_eq!(log_likelihood(&[2.0, 2.0], &[], &g, &w).unwrap(), -2.0);
        assert_relative_eq!(log_likelihood(&[2.0, 2.0], &[vec![0.5]], &g, &w).unwrap(), -2.0 + 2f64.ln());
        assert_eq!(log_likelihood(&[0.0, 1.0], &[vec![0.0]], &g, &w).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(log_likelihood(&[1.0, 1.0], &[vec![1.5]], &g, &w), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn likelihood_scaling() {
        let g = unit_grid(5);
        let w = integration_weights(&g);
        let xi = [0.3, 1.2, 2.0, 0.7, 1.1];
        let ev = vec![vec![0.1], vec![0.45], vec![0.99]];
        let mu = intensity_measure(&xi, &w).unwrap();
        for s in [0.5, 2.0, 3.7] {
            let scaled: Vec<f64> = xi.iter().map(|v| v * s).collect();
            let d = log_likelihood(&scaled, &ev, &g, &w).unwrap() - log_likelihood(&xi, &ev, &g, &w).unwrap();
            assert_relative_eq!(d, -(s - 1.0) * mu + 3.0 * s.ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn posterior_multi_observation() {
        let g = unit_grid(4);
        let w = integration_weights(&g);
        let cov = CovarianceMatrix::new(&g, &KernelParams::new(1.0, vec![0.3]).unwrap()).unwrap();
        let sys = build_constraint_system(&[ConstraintSpec::nonnegative()], &g).unwrap();
        let xi = [0.5, 0.8, 1.0, 0.4];
        let mu = intensity_measure(&xi, &w).unwrap();
        let q = cov.inv_quad_form(&xi);
        let one = PointPattern::empty(1).unwrap();
        let two = PointPattern::empty(2).unwrap();
        assert_relative_eq!(
            log_unnormalized_posterior(&xi, &one, &g, &w, &cov, &sys).unwrap(),
            -0.5 * q - mu,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            log_unnormalized_posterior(&xi, &two, &g, &w, &cov, &sys).unwrap(),
            -0.5 * q - 2.0 * mu,
            max_relative = 1e-12
        );
        let obs = vec![vec![0.2], vec![0.7]];
        let copies = PointPattern::new(vec![obs.clone(); 3]).unwrap();
        let ll = log_likelihood(&xi, &obs, &g, &w).unwrap();
        assert_relative_eq!(
            log_unnormalized_posterior(&xi, &copies, &g, &w, &cov, &sys).unwrap(),
            -0.5 * q + 3.0 * ll,
            max_relative = 1e-12
        );
        let outside = [0.5, -0.1, 1.0, 0.4];
        assert_eq!(log_unnormalized_posterior(&outside, &one, &g, &w, &cov, &sys).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn pattern_validation() {
        assert!(PointPattern::new(vec![]).is_err());
        assert!(PointPattern::new(vec![vec![vec![0.1], vec![0.1, 0.2]]]).is_err());
        assert!(PointPattern::new(vec![vec![vec![f64::NAN]]]).is_err());
        let p = PointPattern::new(vec![vec![], vec![vec![0.1], vec![0.3]]]).unwrap();
        assert_eq!(p.total_events(), 2);
        assert_eq!(p.counts(), vec![0, 2]);
        assert_eq!(p.dim(), Some(1));
    }
}
