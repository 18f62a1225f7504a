//! Exact HMC for truncated multivariate normals.
//!
//! In whitened coordinates `x = μ + L z` the Hamiltonian is `½|z|² + ½|v|²`, so every
//! coordinate moves on `z(t) = a sin t + b cos t`. A halfspace `f·x + g ≥ 0` becomes
//! `U cos(t − φ) + h ≥ 0`, whose first exit time is available in closed form. At a hit the
//! velocity is reflected about the wall normal and the remaining travel time continues.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::constraints::ConstraintSystem;
use crate::error::{Error, Result};
use crate::finite_gp::{check_len, CoefficientSample};
use crate::kernel::CovarianceMatrix;
use crate::rng::seeded;

pub const DEFAULT_TRAVEL_TIME: f64 = FRAC_PI_2;
pub const DEFAULT_BOUNCE_CAP: usize = 1_000_000;

/// Hits closer than this to the current time are ignored unless the particle is leaving.
const HIT_EXCLUSION: f64 = 1e-12;
/// Whitened velocity projections are recomputed from scratch after this many bounces.
const REFRESH_EVERY: usize = 64;
/// Attempts per draw before a trajectory that ends outside the region is reported.
const MAX_RETRIES: usize = 100;

/// `N(mean, covariance)` restricted to `system`.
pub struct TmvnProblem<'a> {
    pub mean: Vec<f64>,
    pub covariance: &'a CovarianceMatrix,
    pub system: &'a ConstraintSystem,
    pub travel_time: f64,
}

/// Draws `n` successive states of the exact HMC chain started at `init`.
pub fn sample_tmvn_hmc(problem: &TmvnProblem<'_>, init: &[f64], n: usize, seed: u64) -> Result<Vec<CoefficientSample>> {
    let mut sampler = HmcSampler::new(problem.covariance, problem.system)?;
    sampler.travel_time = problem.travel_time;
    let mut rng = seeded(seed);
    sampler.sample(&problem.mean, init, n, &mut rng)
}

/// Reusable sampler for a fixed covariance and halfspace system; the mean may vary per call.
#[derive(Debug, Clone)]
pub struct HmcSampler {
    lower: DMatrix<f64>,
    f: DMatrix<f64>,
    g: DVector<f64>,
    /// `M = F L`, the wall normals in whitened coordinates (one row per halfspace).
    m: DMatrix<f64>,
    /// `M Mᵀ`.
    gram: DMatrix<f64>,
    pub travel_time: f64,
    pub bounce_cap: usize,
    /// Constraint slack accepted on returned states.
    pub tolerance: f64,
}

impl HmcSampler {
    pub fn new(covariance: &CovarianceMatrix, system: &ConstraintSystem) -> Result<Self> {
        check_len(system.dim(), covariance.dim())?;
        let (f, g) = system.to_matrix();
        let lower = covariance.lower().clone();
        let m = &f * &lower;
        let gram = &m * m.transpose();
        let scale = covariance.matrix().diagonal().iter().fold(0.0f64, |a, &b| a.max(b)).sqrt();
        Ok(Self {
            lower,
            f,
            g,
            m,
            gram,
            travel_time: DEFAULT_TRAVEL_TIME,
            bounce_cap: DEFAULT_BOUNCE_CAP,
            tolerance: 1e-9 * scale.max(f64::MIN_POSITIVE),
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// Runs `n` trajectories from `init` and returns every end state.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        mean: &[f64],
        init: &[f64],
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<CoefficientSample>> {
        let mut out = Vec::with_capacity(n);
        let mut chain = self.start(mean, init)?;
        for _ in 0..n {
            self.advance(&mut chain, rng)?;
            out.push(CoefficientSample(self.position(&chain)));
        }
        Ok(out)
    }

    /// Runs `steps` trajectories from `init` and returns only the final state.
    pub fn sample_last<R: Rng + ?Sized>(
        &self,
        mean: &[f64],
        init: &[f64],
        steps: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let mut chain = self.start(mean, init)?;
        for _ in 0..steps {
            self.advance(&mut chain, rng)?;
        }
        Ok(self.position(&chain))
    }

    fn position(&self, state: &ChainState) -> Vec<f64> {
        (&state.mean + &self.lower * &state.z).as_slice().to_vec()
    }

    fn start(&self, mean: &[f64], init: &[f64]) -> Result<ChainState> {
        check_len(mean.len(), self.dim())?;
        check_len(init.len(), self.dim())?;
        let mu = DVector::from_column_slice(mean);
        let x0 = DVector::from_column_slice(init);
        let margin = (&self.f * &x0 + &self.g).min();
        if self.f.nrows() > 0 && margin < -self.tolerance {
            return Err(Error::Infeasible(format!("HMC start violates the constraints (margin {margin:e})")));
        }
        let z = self
            .lower
            .solve_lower_triangular(&(&x0 - &mu))
            .ok_or_else(|| Error::Conditioning("singular covariance factor".into()))?;
        let h = &self.f * &mu + &self.g;
        let mz = &self.m * &z;
        Ok(ChainState { mean: mu, h, z, mz })
    }

    fn advance<R: Rng + ?Sized>(&self, state: &mut ChainState, rng: &mut R) -> Result<()> {
        for _ in 0..MAX_RETRIES {
            if let Some((z, mz)) = self.trajectory(state, rng)? {
                let x = &state.mean + &self.lower * &z;
                let ok = self.f.nrows() == 0 || (&self.f * &x + &self.g).min() >= -self.tolerance;
                if ok {
                    state.z = z;
                    state.mz = mz;
                    return Ok(());
                }
            }
        }
        Err(Error::Divergence(format!("{MAX_RETRIES} consecutive HMC trajectories ended outside the region")))
    }

    /// One trajectory of length `travel_time`; `None` if it ends outside numerically.
    fn trajectory<R: Rng + ?Sized>(
        &self,
        state: &ChainState,
        rng: &mut R,
    ) -> Result<Option<(DVector<f64>, DVector<f64>)>> {
        let n = self.dim();
        let p = self.m.nrows();
        let mut a = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut b = state.z.clone();
        let mut ma = &self.m * &a;
        let mut mb = state.mz.clone();
        let h = &state.h;
        let mut remaining = self.travel_time;
        let mut bounces = 0usize;

        loop {
            let mut t_hit = f64::INFINITY;
            let mut wall = usize::MAX;
            for r in 0..p {
                let (ar, br, hr) = (ma[r], mb[r], h[r]);
                let u = (ar * ar + br * br).sqrt();
                if u == 0.0 {
                    continue;
                }
                let t = if hr + br <= 0.0 && ar < 0.0 {
                    0.0
                } else if u <= hr || u <= -hr {
                    continue;
                } else {
                    let phi = ar.atan2(br);
                    let mut t = (phi + (-hr / u).acos()).rem_euclid(2.0 * PI);
                    if t < HIT_EXCLUSION && ar >= 0.0 {
                        t += 2.0 * PI;
                    }
                    t
                };
                if t < t_hit {
                    t_hit = t;
                    wall = r;
                }
            }

            if t_hit >= remaining {
                let (s, c) = remaining.sin_cos();
                let z = &a * s + &b * c;
                let mz = &ma * s + &mb * c;
                let end_ok = (0..p).all(|r| mz[r] + h[r] >= -self.tolerance);
                return Ok(end_ok.then_some((z, mz)));
            }

            bounces += 1;
            if bounces > self.bounce_cap {
                return Err(Error::Divergence(format!("HMC trajectory exceeded {} wall reflections", self.bounce_cap)));
            }
            let (s, c) = t_hit.sin_cos();
            let pos = &a * s + &b * c;
            let vel = &a * c - &b * s;
            let mpos = &ma * s + &mb * c;
            let mvel = &ma * c - &mb * s;
            let coef = 2.0 * mvel[wall] / self.gram[(wall, wall)];
            a = vel - self.m.row(wall).transpose() * coef;
            ma = mvel - self.gram.column(wall) * coef;
            b = pos;
            mb = mpos;
            remaining -= t_hit;
            if bounces.is_multiple_of(REFRESH_EVERY) {
                ma = &self.m * &a;
                mb = &self.m * &b;
            }
        }
    }
}

struct ChainState {
    mean: DVector<f64>,
    h: DVector<f64>,
    z: DVector<f64>,
    mz: DVector<f64>,
}
