//! Monte Carlo estimates of Gaussian mass on polyhedral regions.
//!
//! For `x ~ N(μ, Σ)` and a region `{F x + g ≥ 0}` the constraint values `y = F x + g` are
//! Gaussian with covariance `S = F Σ Fᵀ`. A pivoted Cholesky factor `y = ν + L w`,
//! `w ~ N(0, I)`, is lower trapezoidal, so constraint `r` only involves `w` up to its
//! pivot column. Sampling `w` one coordinate at a time from the normal truncated to the
//! interval allowed by the constraints pivoting on that coordinate, and multiplying the
//! interval masses, yields an unbiased importance weight for the region probability
//! (separation of variables). Rows are pivoted greedily by smallest conditional mass
//! first, using truncated means of the earlier coordinates.
//!
//! `S` may be singular when there are more constraints than dimensions; rows whose
//! residual variance vanishes are attached to the column that completed them.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::constraints::ConstraintSystem;
use crate::error::{Error, Result};
use crate::finite_gp::check_len;
use crate::normal::{log_interval_prob, sample_truncated, truncated_mean};
use crate::rng::seeded;

/// Residual variance (relative to the row's own variance) below which a row is determined.
const DETERMINED_TOL: f64 = 1e-10;
/// Rows whose mean exceeds this many standard deviations are treated as always satisfied;
/// each one changes the probability by less than `Φ(−8) ≈ 6e−16`.
const INACTIVE_SIGMAS: f64 = 8.0;

/// A log-domain Monte Carlo estimate of a Gaussian region probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthantEstimate {
    pub log_probability: f64,
    /// Standard error of the probability estimate itself (not of its logarithm).
    pub std_error: f64,
    pub n_samples: usize,
}

impl OrthantEstimate {
    pub fn probability(&self) -> f64 {
        self.log_probability.exp()
    }

    /// Delta-method standard error of `log_probability`.
    pub fn log_std_error(&self) -> f64 {
        self.std_error / self.probability()
    }
}

/// Region-probability estimator for a fixed covariance and halfspace system.
#[derive(Debug, Clone)]
pub struct RegionProbability {
    f: DMatrix<f64>,
    g: DVector<f64>,
    s: DMatrix<f64>,
}

/// Pivoted factor of `S` for one mean: rows grouped by the `w` coordinate they bound.
struct Factor {
    /// `factor[i]` lists `(row, coefficients on w_0..=w_i)` for rows pivoting on column `i`.
    columns: Vec<Vec<(usize, Vec<f64>)>>,
    /// Rows with zero variance: feasible iff their mean is non-negative.
    constant_rows: Vec<usize>,
}

impl RegionProbability {
    /// `covariance` is the Gaussian covariance `Σ`; the region is `system`.
    pub fn new(covariance: &DMatrix<f64>, system: &ConstraintSystem) -> Result<Self> {
        check_len(system.dim(), covariance.nrows())?;
        let (f, g) = system.to_matrix();
        Self::from_parts(covariance, f, g)
    }

    /// The positive orthant `{x ≥ 0}` in `covariance.nrows()` dimensions.
    pub fn orthant(covariance: &DMatrix<f64>) -> Result<Self> {
        let n = covariance.nrows();
        Self::from_parts(covariance, DMatrix::identity(n, n), DVector::zeros(n))
    }

    fn from_parts(covariance: &DMatrix<f64>, f: DMatrix<f64>, g: DVector<f64>) -> Result<Self> {
        if covariance.nrows() != covariance.ncols() || covariance.nrows() == 0 {
            return Err(Error::Shape("covariance must be square and non-empty".into()));
        }
        let asym = (covariance - covariance.transpose()).abs().max();
        let scale = covariance.abs().max();
        if !(asym <= 1e-12 * scale) {
            return Err(Error::Conditioning("covariance is not symmetric".into()));
        }
        if covariance.diagonal().iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Conditioning("covariance has a non-positive diagonal".into()));
        }
        let s = &f * covariance * f.transpose();
        Ok(Self { f, g, s })
    }

    /// Estimate of `ln P(F x + g ≥ 0)` for `x ~ N(mean, Σ)` from `n_mc` weighted draws.
    pub fn estimate(&self, mean: &[f64], n_mc: usize, seed: u64) -> Result<OrthantEstimate> {
        let nu = self.offsets(mean, n_mc)?;
        let skip = self.inactive(&nu);
        let factor = self.factorise(&nu, &skip)?;
        Ok(self.run(&factor, &nu, n_mc, seed))
    }

    /// `ln P(region | mean_a) − ln P(region | mean_b)` with common random numbers.
    ///
    /// Both estimates share one variable ordering, chosen at the midpoint of the two means.
    /// Each stays unbiased, their errors are strongly correlated, and swapping the arguments
    /// exactly negates the result.
    pub fn log_ratio(&self, mean_a: &[f64], mean_b: &[f64], n_mc: usize, seed: u64) -> Result<f64> {
        let nu_a = self.offsets(mean_a, n_mc)?;
        let nu_b = self.offsets(mean_b, n_mc)?;
        let skip: Vec<bool> = self.inactive(&nu_a).iter().zip(self.inactive(&nu_b)).map(|(a, b)| *a && b).collect();
        let midpoint = (&nu_a + &nu_b) * 0.5;
        let factor = self.factorise(&midpoint, &skip)?;
        let a = self.run(&factor, &nu_a, n_mc, seed);
        let b = self.run(&factor, &nu_b, n_mc, seed);
        Ok(a.log_probability - b.log_probability)
    }

    fn offsets(&self, mean: &[f64], n_mc: usize) -> Result<DVector<f64>> {
        check_len(mean.len(), self.f.ncols())?;
        if n_mc < 2 {
            return Err(Error::ParameterDomain(format!("need at least 2 MC samples, got {n_mc}")));
        }
        Ok(&self.f * DVector::from_column_slice(mean) + &self.g)
    }

    /// Rows far enough inside the region to be ignored.
    fn inactive(&self, nu: &DVector<f64>) -> Vec<bool> {
        (0..nu.len())
            .map(|r| {
                let d = self.s[(r, r)];
                d > 0.0 && nu[r] > INACTIVE_SIGMAS * d.sqrt()
            })
            .collect()
    }

    fn run(&self, factor: &Factor, nu: &DVector<f64>, n_mc: usize, seed: u64) -> OrthantEstimate {
        if factor.constant_rows.iter().any(|&r| nu[r] < 0.0) {
            return OrthantEstimate { log_probability: f64::NEG_INFINITY, std_error: 0.0, n_samples: n_mc };
        }
        let mut rng = seeded(seed);
        let rank = factor.columns.len();
        let mut w = vec![0.0; rank];
        let mut log_weights = Vec::with_capacity(n_mc);
        for _ in 0..n_mc {
            let mut lw = 0.0;
            for i in 0..rank {
                let mut lo = f64::NEG_INFINITY;
                let mut hi = f64::INFINITY;
                for (row, coef) in &factor.columns[i] {
                    let partial: f64 = nu[*row] + coef[..i].iter().zip(&w[..i]).map(|(c, x)| c * x).sum::<f64>();
                    let c = coef[i];
                    let bound = -partial / c;
                    if c > 0.0 {
                        lo = lo.max(bound);
                    } else {
                        hi = hi.min(bound);
                    }
                }
                if lo <= -INACTIVE_SIGMAS && hi >= INACTIVE_SIGMAS {
                    // Mass outside [−8, 8] is below 1.3e−15; skip the tail arithmetic.
                    let z: f64 = rng.sample(StandardNormal);
                    w[i] = z.clamp(lo, hi);
                    continue;
                }
                let lp = log_interval_prob(lo, hi);
                if lp == f64::NEG_INFINITY {
                    lw = f64::NEG_INFINITY;
                    break;
                }
                lw += lp;
                w[i] = sample_truncated(lo, hi, &mut rng);
            }
            log_weights.push(lw);
        }
        summarise(&log_weights)
    }

    /// Greedy pivoted factor of `S` restricted to rows not in `skip`, ordered using `nu`.
    fn factorise(&self, nu: &DVector<f64>, skip: &[bool]) -> Result<Factor> {
        let p = self.s.nrows();
        let diag: Vec<f64> = (0..p).map(|r| self.s[(r, r)]).collect();
        let mut resid = diag.clone();
        // l[r] holds row r of the trapezoidal factor, grown one column at a time.
        let mut l: Vec<Vec<f64>> = vec![Vec::new(); p];
        let mut cond_mean: Vec<f64> = nu.iter().copied().collect();
        let mut assigned = vec![false; p];
        let mut columns: Vec<Vec<(usize, Vec<f64>)>> = Vec::new();
        let mut constant_rows = Vec::new();

        for r in 0..p {
            if !(diag[r] > 0.0) {
                assigned[r] = true;
                constant_rows.push(r);
            } else if skip[r] {
                assigned[r] = true;
            }
        }

        loop {
            // Smallest conditional mass P(y_r ≥ 0 | earlier columns at their means).
            let mut best = None;
            let mut best_score = f64::INFINITY;
            for r in (0..p).filter(|&r| !assigned[r]) {
                let score = cond_mean[r] / resid[r].sqrt();
                if score < best_score {
                    best_score = score;
                    best = Some(r);
                }
            }
            let Some(piv) = best else { break };
            let i = columns.len();
            let sd = resid[piv].sqrt();
            let piv_row = l[piv].clone();
            let mut col = vec![(piv, {
                let mut c = piv_row.clone();
                c.push(sd);
                c
            })];
            assigned[piv] = true;
            l[piv].push(sd);
            resid[piv] = 0.0;

            let e_w = truncated_mean(-cond_mean[piv] / sd, f64::INFINITY);
            cond_mean[piv] += sd * e_w;

            for r in 0..p {
                if assigned[r] {
                    continue;
                }
                let dot: f64 = l[r].iter().zip(&piv_row).map(|(a, b)| a * b).sum();
                let v = (self.s[(r, piv)] - dot) / sd;
                l[r].push(v);
                resid[r] -= v * v;
                cond_mean[r] += v * e_w;
                if resid[r] < -1e-8 * diag[r] {
                    return Err(Error::Conditioning(format!(
                        "covariance is not positive semi-definite (residual {:e})",
                        resid[r]
                    )));
                }
                if !(resid[r] > DETERMINED_TOL * diag[r]) {
                    assigned[r] = true;
                    col.push((r, l[r].clone()));
                }
            }
            debug_assert!(col.iter().all(|(_, c)| c.len() == i + 1));
            columns.push(col);
        }
        Ok(Factor { columns, constant_rows })
    }
}

fn summarise(log_weights: &[f64]) -> OrthantEstimate {
    let n = log_weights.len();
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return OrthantEstimate { log_probability: f64::NEG_INFINITY, std_error: 0.0, n_samples: n };
    }
    let scaled: Vec<f64> = log_weights.iter().map(|&l| (l - max).exp()).collect();
    let mean = scaled.iter().sum::<f64>() / n as f64;
    let var = scaled.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    OrthantEstimate { log_probability: max + mean.ln(), std_error: max.exp() * (var / n as f64).sqrt(), n_samples: n }
}

/// `ln P(X ≥ 0)` for `X ~ N(mean, covariance)`.
pub fn orthant_log_probability(
    mean: &[f64],
    covariance: &DMatrix<f64>,
    n_mc: usize,
    seed: u64,
) -> Result<OrthantEstimate> {
    RegionProbability::orthant(covariance)?.estimate(mean, n_mc, seed)
}

/// `ln β = ln P(N(χᵏ, Σ) ≥ 0) − ln P(N(χᵏ⁺¹, Σ) ≥ 0)`, both estimated from `seed`.
pub fn proposal_log_ratio(
    sigma: &DMatrix<f64>,
    chi_k: &[f64],
    chi_next: &[f64],
    n_mc: usize,
    seed: u64,
) -> Result<f64> {
    if chi_k.iter().chain(chi_next).any(|&v| v < 0.0) {
        return Err(Error::ParameterDomain("proposal ratio needs non-negative states".into()));
    }
    RegionProbability::orthant(sigma)?.log_ratio(chi_k, chi_next, n_mc, seed)
}
