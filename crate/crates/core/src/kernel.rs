//! Squared-exponential covariance functions and covariance matrices over knot grids.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::finite_gp::KnotGrid;

/// Relative jitter added to the diagonal before the first factorisation attempt.
pub const DEFAULT_JITTER: f64 = 1e-8;
/// Largest relative jitter tried before giving up.
pub const MAX_JITTER: f64 = 1e-4;

/// A stationary covariance function on `d`-dimensional inputs.
pub trait Kernel {
    fn dim(&self) -> usize;
    fn variance(&self) -> f64;
    fn eval(&self, x: &[f64], y: &[f64]) -> f64;
}

/// Product squared-exponential kernel: `σ² ∏ᵢ exp(−(xᵢ−yᵢ)²/(2ℓᵢ²))`.
///
/// The variance is applied once for the whole product, not once per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    variance: f64,
    lengthscales: Vec<f64>,
}

impl KernelParams {
    pub fn new(variance: f64, lengthscales: Vec<f64>) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::ParameterDomain(format!("variance must be positive, got {variance}")));
        }
        if lengthscales.is_empty() {
            return Err(Error::ParameterDomain("at least one lengthscale required".into()));
        }
        if let Some(l) = lengthscales.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::ParameterDomain(format!("lengthscales must be positive, got {l}")));
        }
        Ok(Self { variance, lengthscales })
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.lengthscales
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

impl Kernel for KernelParams {
    fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    fn variance(&self) -> f64 {
        self.variance
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let exponent: f64 =
            x.iter().zip(y).zip(&self.lengthscales).map(|((a, b), l)| (a - b).powi(2) / (2.0 * l * l)).sum();
        self.variance * (-exponent).exp()
    }
}

/// One-dimensional squared-exponential covariance `σ² exp(−(t−t2)²/(2ℓ²))`.
pub fn se_kernel(t: f64, t2: f64, variance: f64, lengthscale: f64) -> Result<f64> {
    if !(variance > 0.0) || !(lengthscale > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "se_kernel needs positive variance and lengthscale, got ({variance}, {lengthscale})"
        )));
    }
    let r = t - t2;
    Ok(variance * (-(r * r) / (2.0 * lengthscale * lengthscale)).exp())
}

/// Product SE kernel between two `d`-dimensional points.
pub fn tensor_kernel(x: &[f64], x2: &[f64], params: &KernelParams) -> Result<f64> {
    if x.len() != x2.len() || x.len() != params.dim() {
        return Err(Error::Shape(format!(
            "tensor_kernel: points of dimension {} and {} with {} lengthscales",
            x.len(),
            x2.len(),
            params.dim()
        )));
    }
    Ok(params.eval(x, x2))
}

/// A covariance matrix over the flattened knots together with its lower Cholesky factor.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    matrix: DMatrix<f64>,
    lower: DMatrix<f64>,
    jitter: f64,
}

impl CovarianceMatrix {
    /// Builds Γ with the default jitter schedule (`1e-8·σ²`, escalating ×10 to `1e-4·σ²`).
    pub fn new(grid: &KnotGrid, kernel: &impl Kernel) -> Result<Self> {
        covariance_matrix(grid, kernel, DEFAULT_JITTER * kernel.variance())
    }

    /// Factorises an arbitrary symmetric matrix, escalating diagonal jitter on failure.
    pub fn from_matrix(base: DMatrix<f64>, jitter: f64, scale: f64) -> Result<Self> {
        if base.nrows() != base.ncols() || base.nrows() == 0 {
            return Err(Error::Shape("covariance must be square and non-empty".into()));
        }
        let cap = (MAX_JITTER * scale).max(jitter);
        let mut current = jitter;
        loop {
            let mut m = base.clone();
            for i in 0..m.nrows() {
                m[(i, i)] += current;
            }
            if let Some(chol) = m.clone().cholesky() {
                return Ok(Self { matrix: m, lower: chol.l(), jitter: current });
            }
            if current >= cap {
                return Err(Error::Conditioning(format!(
                    "Cholesky factorisation failed with jitter up to {current:e}"
                )));
            }
            current = if current > 0.0 { (current * 10.0).min(cap) } else { DEFAULT_JITTER * scale };
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// The jittered matrix `Γ + jitter·I`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Lower-triangular `L` with `L Lᵀ = Γ + jitter·I`.
    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `xᵀ Γ⁻¹ x` via a triangular solve.
    pub fn inv_quad_form(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        let y = self.lower.solve_lower_triangular(&v).expect("Cholesky factor has a positive diagonal");
        y.norm_squared()
    }

    /// The same matrix multiplied by `factor > 0`, reusing the factorisation.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { matrix: &self.matrix * factor, lower: &self.lower * factor.sqrt(), jitter: self.jitter * factor }
    }
}

/// `Γ[p,q] = k(t_p, t_q) + jitter·1[p=q]` over the flattened knot ordering.
///
/// `jitter` is the initial absolute diagonal term; it is escalated ×10 up to `1e-4·σ²`
/// when the Cholesky factorisation fails.
pub fn covariance_matrix(grid: &KnotGrid, kernel: &impl Kernel, jitter: f64) -> Result<CovarianceMatrix> {
    if kernel.dim() != grid.dim() {
        return Err(Error::Shape(format!(
            "kernel has {} lengthscales but grid is {}-dimensional",
            kernel.dim(),
            grid.dim()
        )));
    }
    if !(jitter >= 0.0) {
        return Err(Error::ParameterDomain(format!("jitter must be non-negative, got {jitter}")));
    }
    let n = grid.size();
    let points: Vec<Vec<f64>> = (0..n).map(|p| grid.knot_point(p)).collect();
    let mut m = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in 0..=p {
            let v = kernel.eval(&points[p], &points[q]);
            m[(p, q)] = v;
            m[(q, p)] = v;
        }
    }
    CovarianceMatrix::from_matrix(m, jitter, kernel.variance())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn se_kernel_values() {
        assert_eq!(se_kernel(0.3, 0.3, 1.0, 0.2).unwrap(), 1.0);
        assert_relative_eq!(se_kernel(0.0, 0.2, 1.0, 0.2).unwrap(), 0.606_530_659_712_633_4, epsilon = 1e-15);
        assert_relative_eq!(se_kernel(0.0, 1.0, 2.0, 0.5).unwrap(), 0.270_670_566_473_225_4, epsilon = 1e-15);
    }

    #[test]
    fn se_kernel_rejects_bad_params() {
        assert!(matches!(se_kernel(0.0, 1.0, 0.0, 0.5), Err(Error::ParameterDomain(_))));
        assert!(matches!(se_kernel(0.0, 1.0, 1.0, -0.5), Err(Error::ParameterDomain(_))));
        assert!(KernelParams::new(1.0, vec![0.1, 0.0]).is_err());
        assert!(KernelParams::new(-1.0, vec![0.1]).is_err());
    }

    #[test]
    fn tensor_kernel_values() {
        let p = KernelParams::new(1.0, vec![0.2, 0.2]).unwrap();
        assert_eq!(tensor_kernel(&[0.4, 0.1], &[0.4, 0.1], &p).unwrap(), 1.0);
        assert_relative_eq!(tensor_kernel(&[0.0, 0.0], &[0.2, 0.0], &p).unwrap(), (-0.5f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(tensor_kernel(&[0.0, 0.0], &[0.2, 0.2], &p).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        assert!(matches!(tensor_kernel(&[0.0], &[0.2, 0.2], &p), Err(Error::Shape(_))));
    }

    #[test]
    fn covariance_small_cases() {
        let g1 = KnotGrid::new(&[(0.0, 1.0)], &[2]).unwrap();
        let p = KernelParams::new(1.0, vec![0.2]).unwrap();
        let c = covariance_matrix(&g1, &p, 0.0).unwrap();
        assert_eq!(c.matrix()[(0, 0)], 1.0);
        assert_relative_eq!(c.matrix()[(0, 1)], (-12.5f64).exp(), epsilon = 1e-18);
        assert_eq!(c.jitter(), 0.0);
    }

    #[test]
    fn covariance_is_symmetric_and_factorises() {
        let g = KnotGrid::new(&[(0.0, 1.0), (0.0, 2.0)], &[8, 6]).unwrap();
        let p = KernelParams::new(2.0, vec![0.3, 0.7]).unwrap();
        let c = CovarianceMatrix::new(&g, &p).unwrap();
        let m = c.matrix();
        assert_eq!(m, &m.transpose());
        let rebuilt = c.lower() * c.lower().transpose();
        assert!((rebuilt - m).abs().max() < 1e-12);
        let eig = m.clone().symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn dense_grid_escalates_jitter() {
        // 100 knots with a long lengthscale is numerically singular without jitter.
        let g = KnotGrid::new(&[(0.0, 1.0)], &[100]).unwrap();
        let p = KernelParams::new(1.0, vec![0.5]).unwrap();
        let c = covariance_matrix(&g, &p, 0.0).unwrap();
        assert!(c.jitter() > 0.0 && c.jitter() <= MAX_JITTER);
    }

    #[test]
    fn inv_quad_form_matches_solve() {
        let g = KnotGrid::new(&[(0.0, 1.0)], &[5]).unwrap();
        let p = KernelParams::new(1.0, vec![0.3]).unwrap();
        let c = CovarianceMatrix::new(&g, &p).unwrap();
        let x = [0.1, -0.4, 0.3, 0.2, 1.0];
        let inv = c.matrix().clone().try_inverse().unwrap();
        let v = DVector::from_column_slice(&x);
        let direct = (v.transpose() * inv * &v)[(0, 0)];
        assert_relative_eq!(c.inv_quad_form(&x), direct, max_relative = 1e-8);
    }

    proptest! {
        #[test]
        fn stationarity(t in -5.0..5.0f64, t2 in -5.0..5.0f64, c in -10.0..10.0f64, l in 0.05..3.0f64) {
            let a = se_kernel(t, t2, 1.3, l).unwrap();
            let b = se_kernel(t + c, t2 + c, 1.3, l).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
            prop_assert_eq!(a, se_kernel(t2, t, 1.3, l).unwrap());
        }

        #[test]
        fn monotone_decay(t in -5.0..5.0f64, r1 in 0.0..4.0f64, dr in 0.0..4.0f64, l in 0.05..3.0f64) {
            let near = se_kernel(t, t + r1, 1.0, l).unwrap();
            let far = se_kernel(t, t + r1 + dr, 1.0, l).unwrap();
            prop_assert!(far <= near);
        }

        #[test]
        fn tensor_is_product_of_factors(
            x in proptest::collection::vec(-2.0..2.0f64, 3),
            y in proptest::collection::vec(-2.0..2.0f64, 3),
            ls in proptest::collection::vec(0.1..2.0f64, 3),
            var in 0.1..5.0f64,
        ) {
            let p = KernelParams::new(var, ls.clone()).unwrap();
            let prod: f64 = (0..3).map(|i| se_kernel(x[i], y[i], 1.0, ls[i]).unwrap()).product();
            let t = tensor_kernel(&x, &y, &p).unwrap();
            prop_assert!((t - var * prod).abs() <= 1e-12 * var);
        }
    }
}
