//! Knot grids, hat basis functions and the piecewise-multilinear intensity they define.
//!
//! Coefficients are stored flattened in row-major order over the knot tensor: the last
//! dimension varies fastest. This order is shared by constraint systems, covariance
//! matrices and persisted chains.

use crate::error::{Error, Result};

/// Relative slack allowed when checking that a coordinate lies in its interval.
const DOMAIN_SLACK: f64 = 1e-12;

/// Equispaced knots over a box `∏ [aᵢ, bᵢ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotGrid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    counts: Vec<usize>,
    delta: Vec<f64>,
}

impl KnotGrid {
    /// `domain[i] = (aᵢ, bᵢ)` and `counts[i] = mᵢ ≥ 2`.
    pub fn new(domain: &[(f64, f64)], counts: &[usize]) -> Result<Self> {
        if domain.is_empty() || domain.len() != counts.len() {
            return Err(Error::ParameterDomain(format!(
                "need one knot count per dimension, got {} intervals and {} counts",
                domain.len(),
                counts.len()
            )));
        }
        for (i, (&(a, b), &m)) in domain.iter().zip(counts).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::ParameterDomain(format!("dimension {i}: degenerate interval [{a}, {b}]")));
            }
            if m < 2 {
                return Err(Error::ParameterDomain(format!("dimension {i}: need at least 2 knots, got {m}")));
            }
        }
        Ok(Self {
            lower: domain.iter().map(|d| d.0).collect(),
            upper: domain.iter().map(|d| d.1).collect(),
            counts: counts.to_vec(),
            delta: domain.iter().zip(counts).map(|(&(a, b), &m)| (b - a) / (m - 1) as f64).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    /// Total number of knots `∏ mᵢ`.
    pub fn size(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn bounds(&self, dim: usize) -> (f64, f64) {
        (self.lower[dim], self.upper[dim])
    }

    pub fn domain(&self) -> Vec<(f64, f64)> {
        self.lower.iter().copied().zip(self.upper.iter().copied()).collect()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }

    /// Position of knot `j` along dimension `dim`; the last knot is exactly `bᵢ`.
    pub fn knot(&self, dim: usize, j: usize) -> f64 {
        if j + 1 == self.counts[dim] {
            self.upper[dim]
        } else {
            self.lower[dim] + j as f64 * self.delta[dim]
        }
    }

    pub fn knots(&self, dim: usize) -> Vec<f64> {
        (0..self.counts[dim]).map(|j| self.knot(dim, j)).collect()
    }

    /// Per-dimension indices of a flattened knot index.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            idx[d] = flat % self.counts[d];
            flat /= self.counts[d];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.counts).fold(0, |acc, (&i, &m)| acc * m + i)
    }

    /// Distance between flattened neighbours along `dim`.
    pub fn stride(&self, dim: usize) -> usize {
        self.counts[dim + 1..].iter().product()
    }

    pub fn knot_point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).iter().enumerate().map(|(d, &j)| self.knot(d, j)).collect()
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Shape(format!("point has {} coordinates, grid is {}-dimensional", x.len(), self.dim())));
        }
        for (d, &v) in x.iter().enumerate() {
            self.check_coordinate(d, v)?;
        }
        Ok(())
    }

    fn check_coordinate(&self, dim: usize, v: f64) -> Result<()> {
        let (a, b) = self.bounds(dim);
        let slack = DOMAIN_SLACK * (b - a);
        if !(v >= a - slack && v <= b + slack) {
            return Err(Error::OutOfDomain(format!("coordinate {v} outside [{a}, {b}] in dimension {dim}")));
        }
        Ok(())
    }

    /// The (at most two) non-zero hat functions along `dim` at `v`, as `(knot, value)`.
    fn axis_support(&self, dim: usize, v: f64) -> [(usize, f64); 2] {
        let m = self.counts[dim];
        let u = ((v - self.lower[dim]) / self.delta[dim]).clamp(0.0, (m - 1) as f64);
        let k = (u.floor() as usize).min(m - 2);
        let frac = u - k as f64;
        [(k, 1.0 - frac), (k + 1, frac)]
    }

    /// Non-zero tensor basis values `∏ᵢ φ_{jᵢ}(xᵢ)` at `x`, as `(flat index, value)`.
    ///
    /// At most `2^d` entries; zero-valued corners are kept so the length is fixed.
    pub fn basis_support(&self, x: &[f64]) -> Result<Vec<(usize, f64)>> {
        self.check_point(x)?;
        let axes: Vec<[(usize, f64); 2]> = x.iter().enumerate().map(|(d, &v)| self.axis_support(d, v)).collect();
        let d = self.dim();
        let mut out = Vec::with_capacity(1 << d);
        for corner in 0..(1usize << d) {
            let mut flat = 0;
            let mut w = 1.0;
            for (i, axis) in axes.iter().enumerate() {
                let (j, phi) = axis[(corner >> (d - 1 - i)) & 1];
                flat = flat * self.counts[i] + j;
                w *= phi;
            }
            out.push((flat, w));
        }
        Ok(out)
    }
}

/// Knot values `ξ` of one intensity realisation, flattened (last dimension fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSample(pub Vec<f64>);

impl CoefficientSample {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for CoefficientSample {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Integrals `cⱼ` of the tensor hat functions; `μ_m = Σ cⱼ ξⱼ`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationWeights(pub Vec<f64>);

impl IntegrationWeights {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Hat function `φⱼ` of dimension `dim` evaluated at `x`.
pub fn hat_basis(x: f64, j: usize, grid: &KnotGrid, dim: usize) -> Result<f64> {
    if dim >= grid.dim() || j >= grid.counts[dim] {
        return Err(Error::Shape(format!("no knot {j} in dimension {dim}")));
    }
    grid.check_coordinate(dim, x)?;
    let r = ((x - grid.knot(dim, j)) / grid.delta[dim]).abs();
    Ok(if r <= 1.0 { 1.0 - r } else { 0.0 })
}

/// `Λ_m(x) = Σ [∏ᵢ φ_{jᵢ}(xᵢ)] ξ_{j₁…j_d}`.
pub fn evaluate_intensity(coeffs: &[f64], grid: &KnotGrid, x: &[f64]) -> Result<f64> {
    check_len(coeffs.len(), grid.size())?;
    Ok(grid.basis_support(x)?.into_iter().map(|(p, w)| w * coeffs[p]).sum())
}

/// Per-dimension weights `(Δ/2, Δ, …, Δ, Δ/2)` combined by tensor product.
pub fn integration_weights(grid: &KnotGrid) -> IntegrationWeights {
    let axis: Vec<Vec<f64>> = (0..grid.dim())
        .map(|d| {
            let m = grid.counts[d];
            let delta = grid.delta[d];
            (0..m).map(|j| if j == 0 || j + 1 == m { delta / 2.0 } else { delta }).collect()
        })
        .collect();
    let w = (0..grid.size())
        .map(|flat| grid.multi_index(flat).iter().enumerate().map(|(d, &j)| axis[d][j]).product())
        .collect();
    IntegrationWeights(w)
}

/// `μ_m = Σ cⱼ ξⱼ`, the exact integral of the interpolant over the domain.
pub fn intensity_measure(coeffs: &[f64], weights: &IntegrationWeights) -> Result<f64> {
    check_len(coeffs.len(), weights.0.len())?;
    Ok(coeffs.iter().zip(&weights.0).map(|(x, c)| x * c).sum())
}

pub(crate) fn check_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Shape(format!("expected {want} coefficients, got {got}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid1(a: f64, b: f64, m: usize) -> KnotGrid {
        KnotGrid::new(&[(a, b)], &[m]).unwrap()
    }

    #[test]
    fn make_grid_examples() {
        let g = grid1(0.0, 1.0, 3);
        assert_eq!(g.knots(0), vec![0.0, 0.5, 1.0]);
        assert_eq!(g.delta()[0], 0.5);
        let g = grid1(0.0, 50.0, 100);
        assert_relative_eq!(g.delta()[0], 50.0 / 99.0);
        assert_eq!(g.knot(0, 99), 50.0);
        let g = KnotGrid::new(&[(0.0, 1.0), (0.0, 1.0)], &[15, 15]).unwrap();
        assert_eq!(g.size(), 225);
    }

    #[test]
    fn make_grid_rejects_bad_input() {
        assert!(KnotGrid::new(&[(0.0, 1.0)], &[1]).is_err());
        assert!(KnotGrid::new(&[(1.0, 1.0)], &[3]).is_err());
        assert!(KnotGrid::new(&[(0.0, 1.0)], &[3, 3]).is_err());
    }

    #[test]
    fn index_round_trip() {
        let g = KnotGrid::new(&[(0.0, 1.0), (0.0, 2.0), (1.0, 3.0)], &[3, 4, 5]).unwrap();
        for flat in 0..g.size() {
            assert_eq!(g.flat_index(&g.multi_index(flat)), flat);
        }
        assert_eq!(g.multi_index(1), vec![0, 0, 1]);
        assert_eq!(g.stride(0), 20);
        assert_eq!(g.stride(2), 1);
    }

    #[test]
    fn hat_basis_values() {
        let g = grid1(0.0, 1.0, 5);
        let d = g.delta()[0];
        assert_eq!(hat_basis(0.5, 2, &g, 0).unwrap(), 1.0);
        assert_relative_eq!(hat_basis(0.5 + d / 2.0, 2, &g, 0).unwrap(), 0.5);
        assert_relative_eq!(hat_basis(0.5 - d / 2.0, 2, &g, 0).unwrap(), 0.5);
        assert_eq!(hat_basis(0.25, 2, &g, 0).unwrap(), 0.0);
        assert_eq!(hat_basis(1.0, 2, &g, 0).unwrap(), 0.0);
        assert!(matches!(hat_basis(1.5, 2, &g, 0), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn evaluate_examples() {
        let g = grid1(0.0, 1.0, 2);
        assert_relative_eq!(evaluate_intensity(&[0.0, 1.0], &g, &[0.25]).unwrap(), 0.25);
        let g2 = KnotGrid::new(&[(0.0, 1.0), (0.0, 1.0)], &[2, 2]).unwrap();
        assert_relative_eq!(evaluate_intensity(&[1.0; 4], &g2, &[0.3, 0.9]).unwrap(), 1.0);
        assert!(matches!(evaluate_intensity(&[1.0; 4], &g2, &[0.3, 1.2]), Err(Error::OutOfDomain(_))));
        assert!(matches!(evaluate_intensity(&[1.0; 3], &g2, &[0.3, 0.2]), Err(Error::Shape(_))));
    }

    #[test]
    fn interpolates_at_knots() {
        let g = KnotGrid::new(&[(-1.0, 2.0), (0.0, 5.0)], &[7, 4]).unwrap();
        let xi: Vec<f64> = (0..g.size()).map(|i| (i as f64 * 0.37).sin() + 2.0).collect();
        for p in 0..g.size() {
            let v = evaluate_intensity(&xi, &g, &g.knot_point(p)).unwrap();
            assert!((v - xi[p]).abs() <= 1e-14 * xi[p].abs(), "knot {p}: {v} vs {}", xi[p]);
        }
    }

    #[test]
    fn weight_examples() {
        assert_eq!(integration_weights(&grid1(0.0, 1.0, 3)).0, vec![0.25, 0.5, 0.25]);
        assert_eq!(integration_weights(&grid1(0.0, 1.0, 2)).0, vec![0.5, 0.5]);
        let g2 = KnotGrid::new(&[(0.0, 1.0), (0.0, 1.0)], &[2, 2]).unwrap();
        let w = integration_weights(&g2);
        assert_eq!(w.0, vec![0.25; 4]);
    }

    #[test]
    fn measure_examples() {
        let g = grid1(0.0, 1.0, 3);
        let w = integration_weights(&g);
        assert_relative_eq!(intensity_measure(&[1.0, 1.0, 1.0], &w).unwrap(), 1.0);
        assert_relative_eq!(intensity_measure(&[0.0, 1.0, 0.0], &w).unwrap(), 0.5);
        assert!(intensity_measure(&[1.0], &w).is_err());
    }

    proptest! {
        #[test]
        fn partition_of_unity_2d(x in 0.0..3.0f64, y in -1.0..1.0f64) {
            let g = KnotGrid::new(&[(0.0, 3.0), (-1.0, 1.0)], &[11, 6]).unwrap();
            let s: f64 = g.basis_support(&[x, y]).unwrap().iter().map(|p| p.1).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn weights_sum_to_volume(m1 in 2usize..20, m2 in 2usize..20, b in 0.5..10.0f64) {
            let g = KnotGrid::new(&[(0.0, b), (1.0, 2.5)], &[m1, m2]).unwrap();
            let s: f64 = integration_weights(&g).0.iter().sum();
            prop_assert!((s - g.volume()).abs() < 1e-12 * g.volume());
        }

        #[test]
        fn hat_basis_matches_support(x in 0.0..2.0f64) {
            let g = grid1(0.0, 2.0, 9);
            let support = g.basis_support(&[x]).unwrap();
            for j in 0..9 {
                let direct = hat_basis(x, j, &g, 0).unwrap();
                let from_support: f64 = support.iter().filter(|p| p.0 == j).map(|p| p.1).sum();
                prop_assert!((direct - from_support).abs() < 1e-12);
            }
        }
    }
}
