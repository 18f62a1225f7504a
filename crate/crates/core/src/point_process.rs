//! Reference intensities, hazard functions and inhomogeneous Poisson simulation.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::cox::PointPattern;
use crate::error::{Error, Result};
use crate::finite_gp::{evaluate_intensity, KnotGrid};
use crate::rng::seeded;
use crate::special::ln_upper_incomplete_gamma;

/// Lower cut-off used when simulating hazards that are singular at zero.
pub const SINGULARITY_EPS: f64 = 1e-6;

/// Vertices of the piecewise-linear third toy intensity.
const TOY3_VERTICES: [(f64, f64); 5] = [(0.0, 2.0), (25.0, 3.0), (50.0, 1.0), (75.0, 2.5), (100.0, 3.0)];

#[derive(Debug, Clone, PartialEq)]
pub enum IntensityFamily {
    /// `2 exp(−x/15) + exp(−((x−25)/10)²)` on `[0, 50]`.
    Toy1,
    /// `5 sin(x²) + 6` on `[0, 5]`.
    Toy2,
    /// Piecewise linear through `(0,2), (25,3), (50,1), (75,2.5), (100,3)` on `[0, 100]`.
    Toy3,
    Weibull {
        alpha: f64,
        beta: f64,
    },
    Gamma {
        alpha: f64,
        beta: f64,
    },
    /// Piecewise-multilinear interpolation of knot values.
    Table {
        grid: KnotGrid,
        values: Vec<f64>,
    },
}

/// A ground-truth intensity with its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensitySpec {
    pub family: IntensityFamily,
    pub domain: Vec<(f64, f64)>,
}

impl IntensitySpec {
    pub fn toy(id: u8) -> Result<Self> {
        let (family, domain) = match id {
            1 => (IntensityFamily::Toy1, (0.0, 50.0)),
            2 => (IntensityFamily::Toy2, (0.0, 5.0)),
            3 => (IntensityFamily::Toy3, (0.0, 100.0)),
            _ => return Err(Error::ParameterDomain(format!("no toy intensity {id}"))),
        };
        Ok(Self { family, domain: vec![domain] })
    }

    pub fn weibull(alpha: f64, beta: f64, domain: (f64, f64)) -> Result<Self> {
        check_shape_params(alpha, beta)?;
        Ok(Self { family: IntensityFamily::Weibull { alpha, beta }, domain: vec![domain] })
    }

    pub fn gamma(alpha: f64, beta: f64, domain: (f64, f64)) -> Result<Self> {
        check_shape_params(alpha, beta)?;
        Ok(Self { family: IntensityFamily::Gamma { alpha, beta }, domain: vec![domain] })
    }

    pub fn table(grid: KnotGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.size() {
            return Err(Error::Shape(format!("table has {} values for {} knots", values.len(), grid.size())));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::ParameterDomain("table intensity values must be non-negative".into()));
        }
        let domain = grid.domain();
        Ok(Self { family: IntensityFamily::Table { grid, values }, domain })
    }

    /// Homogeneous intensity `c` on a box.
    pub fn constant(domain: &[(f64, f64)], c: f64) -> Result<Self> {
        let grid = KnotGrid::new(domain, &vec![2; domain.len()])?;
        let n = grid.size();
        Self::table(grid, vec![c; n])
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn volume(&self) -> f64 {
        self.domain.iter().map(|(a, b)| b - a).product()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Shape(format!("expected a {}-dimensional point", self.dim())));
        }
        for (&v, &(a, b)) in x.iter().zip(&self.domain) {
            if !(v >= a && v <= b) {
                return Err(Error::OutOfDomain(format!("{v} outside [{a}, {b}]")));
            }
        }
        match &self.family {
            IntensityFamily::Toy1 => toy_intensity(1, x[0]),
            IntensityFamily::Toy2 => toy_intensity(2, x[0]),
            IntensityFamily::Toy3 => toy_intensity(3, x[0]),
            IntensityFamily::Weibull { alpha, beta } => weibull_hazard(x[0], *alpha, *beta),
            IntensityFamily::Gamma { alpha, beta } => gamma_hazard(x[0], *alpha, *beta),
            IntensityFamily::Table { grid, values } => evaluate_intensity(values, grid, x),
        }
    }

    /// Whether the intensity is unbounded at the lower end of the domain.
    fn singular_at_lower(&self) -> bool {
        match self.family {
            IntensityFamily::Weibull { beta, .. } | IntensityFamily::Gamma { beta, .. } => {
                beta < 1.0 && self.domain[0].0 <= 0.0
            }
            _ => false,
        }
    }

    /// Region used for simulation: the domain, with `[0, ε)` removed for singular hazards.
    pub fn simulation_domain(&self) -> Vec<(f64, f64)> {
        let mut d = self.domain.clone();
        if self.singular_at_lower() {
            d[0].0 = d[0].0.max(SINGULARITY_EPS);
        }
        d
    }

    /// A dominating constant for thinning on [`Self::simulation_domain`].
    pub fn default_lambda_max(&self) -> Result<f64> {
        match &self.family {
            IntensityFamily::Toy1 => Ok(3.1),
            IntensityFamily::Toy2 => Ok(11.0),
            IntensityFamily::Toy3 => Ok(3.0),
            IntensityFamily::Table { values, .. } => Ok(values.iter().copied().fold(0.0, f64::max)),
            IntensityFamily::Weibull { alpha, beta } | IntensityFamily::Gamma { alpha, beta } => {
                let d = self.simulation_domain()[0];
                let is_weibull = matches!(self.family, IntensityFamily::Weibull { .. });
                if *beta < 1.0 {
                    // Both hazards decrease for β < 1.
                    self.eval(&[d.0])
                } else if is_weibull {
                    self.eval(&[d.1])
                } else {
                    // The gamma hazard increases towards α for β ≥ 1.
                    Ok(*alpha)
                }
            }
        }
    }
}

fn check_shape_params(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::ParameterDomain(format!("scale and shape must be positive, got ({alpha}, {beta})")));
    }
    Ok(())
}

/// Evaluates toy intensity `id ∈ {1, 2, 3}` on its own domain.
pub fn toy_intensity(id: u8, x: f64) -> Result<f64> {
    let domain = match id {
        1 => (0.0, 50.0),
        2 => (0.0, 5.0),
        3 => (0.0, 100.0),
        _ => return Err(Error::ParameterDomain(format!("no toy intensity {id}"))),
    };
    if !(x >= domain.0 && x <= domain.1) {
        return Err(Error::OutOfDomain(format!("toy{id} is defined on [{}, {}], got {x}", domain.0, domain.1)));
    }
    Ok(match id {
        1 => 2.0 * (-x / 15.0).exp() + (-((x - 25.0) / 10.0).powi(2)).exp(),
        2 => 5.0 * (x * x).sin() + 6.0,
        _ => {
            let k = TOY3_VERTICES.windows(2).position(|w| x <= w[1].0).unwrap_or(TOY3_VERTICES.len() - 2);
            let (x0, y0) = TOY3_VERTICES[k];
            let (x1, y1) = TOY3_VERTICES[k + 1];
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        }
    })
}

/// Weibull hazard `αβx^(β−1)`; `+∞` at `x = 0` when `β < 1`.
pub fn weibull_hazard(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    check_shape_params(alpha, beta)?;
    if !(x >= 0.0) {
        return Err(Error::OutOfDomain(format!("hazard needs x ≥ 0, got {x}")));
    }
    if x == 0.0 && beta < 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(alpha * beta * x.powf(beta - 1.0))
}

/// Gamma-renewal hazard `α x^(β−1) e^(−x) / Γ(β, x)` with `Γ(β, x)` the upper incomplete gamma.
pub fn gamma_hazard(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    check_shape_params(alpha, beta)?;
    if !(x >= 0.0) {
        return Err(Error::OutOfDomain(format!("hazard needs x ≥ 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(if beta > 1.0 {
            0.0
        } else if beta == 1.0 {
            alpha
        } else {
            f64::INFINITY
        });
    }
    let ln_h = alpha.ln() + (beta - 1.0) * x.ln() - x - ln_upper_incomplete_gamma(beta, x);
    Ok(ln_h.exp())
}

/// Simulates `n_observations` independent patterns by Lewis–Shedler thinning.
///
/// Candidates come from a homogeneous process of rate `lambda_max` on `domain`; each is kept
/// with probability `λ(x)/lambda_max`. Encountering `λ(x) > lambda_max` is an error.
pub fn simulate_poisson<F>(
    intensity: F,
    domain: &[(f64, f64)],
    lambda_max: f64,
    n_observations: usize,
    seed: u64,
) -> Result<PointPattern>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if !(lambda_max >= 0.0 && lambda_max.is_finite()) {
        return Err(Error::ParameterDomain(format!("lambda_max must be finite and ≥ 0, got {lambda_max}")));
    }
    if n_observations == 0 {
        return Err(Error::ParameterDomain("need at least one observation".into()));
    }
    let volume: f64 = domain.iter().map(|(a, b)| b - a).product();
    let mut rng = seeded(seed);
    let mut observations = Vec::with_capacity(n_observations);
    for _ in 0..n_observations {
        let mut events = Vec::new();
        let count = if lambda_max * volume > 0.0 {
            Poisson::new(lambda_max * volume).map_err(|e| Error::ParameterDomain(e.to_string()))?.sample(&mut rng)
                as usize
        } else {
            0
        };
        for _ in 0..count {
            let x: Vec<f64> = domain.iter().map(|&(a, b)| a + (b - a) * rng.random::<f64>()).collect();
            let lam = intensity(&x)?;
            if lam > lambda_max * (1.0 + 1e-12) {
                return Err(Error::DominatingBound { value: lam, bound: lambda_max, location: x });
            }
            if rng.random::<f64>() * lambda_max < lam {
                events.push(x);
            }
        }
        events.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
        observations.push(events);
    }
    PointPattern::new(observations)
}

/// Simulates from a spec with its default dominating bound and simulation domain.
pub fn simulate_spec(spec: &IntensitySpec, n_observations: usize, seed: u64) -> Result<PointPattern> {
    let lambda_max = spec.default_lambda_max()?;
    simulate_poisson(|x| spec.eval(x), &spec.simulation_domain(), lambda_max, n_observations, seed)
}
