//! Linear inequality systems on the knot coefficients.
//!
//! Every constraint is a closed halfspace `f·ξ + g ≥ 0`. Because the intensity interpolates
//! its knot values linearly, a halfspace system built from the named kinds below holds for
//! the whole interpolant as soon as it holds at the knots.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::finite_gp::{check_len, KnotGrid};

/// Base level of the default strictly feasible point (in intensity units per unit `σ`).
pub const DEFAULT_FEASIBLE_LEVEL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintKind {
    Nonnegative,
    Nonincreasing,
    Nondecreasing,
    Convex,
    Concave,
    Bounded { lower: f64, upper: f64 },
}

/// A named constraint, optionally restricted to some dimensions.
///
/// `dims == None` applies shape constraints (monotonicity, curvature) along every
/// dimension. Pointwise kinds (non-negativity, bounds) ignore `dims`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec {
    pub kind: ConstraintKind,
    pub dims: Option<Vec<usize>>,
}

impl ConstraintSpec {
    pub fn new(kind: ConstraintKind) -> Self {
        Self { kind, dims: None }
    }

    pub fn along(kind: ConstraintKind, dims: Vec<usize>) -> Self {
        Self { kind, dims: Some(dims) }
    }

    pub fn nonnegative() -> Self {
        Self::new(ConstraintKind::Nonnegative)
    }

    pub fn nonincreasing() -> Self {
        Self::new(ConstraintKind::Nonincreasing)
    }

    pub fn nondecreasing() -> Self {
        Self::new(ConstraintKind::Nondecreasing)
    }

    pub fn convex() -> Self {
        Self::new(ConstraintKind::Convex)
    }

    pub fn concave() -> Self {
        Self::new(ConstraintKind::Concave)
    }

    pub fn bounded(lower: f64, upper: f64) -> Self {
        Self::new(ConstraintKind::Bounded { lower, upper })
    }

    fn applies_to(&self, dim: usize) -> bool {
        self.dims.as_ref().is_none_or(|d| d.contains(&dim))
    }

    /// Parses a comma-separated list such as `nonnegative,nondecreasing:0,bounded(0,5)`.
    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        let mut depth = 0usize;
        let mut start = 0;
        for (i, ch) in s.char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => depth = depth.saturating_sub(1),
                ',' if depth == 0 => {
                    out.push(s[start..i].parse()?);
                    start = i + 1;
                }
                _ => {}
            }
        }
        out.push(s[start..].parse()?);
        Ok(out)
    }
}

impl FromStr for ConstraintSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::ParameterDomain(format!("unknown constraint '{s}'"));
        let (head, dims) = match s.rsplit_once(':') {
            Some((h, d)) if !h.contains('(') || h.ends_with(')') => {
                let dims =
                    d.split('+').map(|v| v.trim().parse::<usize>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
                (h.trim(), Some(dims))
            }
            _ => (s, None),
        };
        let kind = match head {
            "nonnegative" => ConstraintKind::Nonnegative,
            "nonincreasing" => ConstraintKind::Nonincreasing,
            "nondecreasing" => ConstraintKind::Nondecreasing,
            "convex" => ConstraintKind::Convex,
            "concave" => ConstraintKind::Concave,
            h if h.starts_with("bounded(") && h.ends_with(')') => {
                let inner = &h["bounded(".len()..h.len() - 1];
                let (l, u) = inner.split_once(',').ok_or_else(bad)?;
                let lower: f64 = l.trim().parse().map_err(|_| bad())?;
                let upper: f64 = u.trim().parse().map_err(|_| bad())?;
                ConstraintKind::Bounded { lower, upper }
            }
            _ => return Err(bad()),
        };
        Ok(Self { kind, dims })
    }
}

impl fmt::Display for ConstraintSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ConstraintKind::Nonnegative => write!(f, "nonnegative")?,
            ConstraintKind::Nonincreasing => write!(f, "nonincreasing")?,
            ConstraintKind::Nondecreasing => write!(f, "nondecreasing")?,
            ConstraintKind::Convex => write!(f, "convex")?,
            ConstraintKind::Concave => write!(f, "concave")?,
            ConstraintKind::Bounded { lower, upper } => write!(f, "bounded({lower},{upper})")?,
        }
        if let Some(d) = &self.dims {
            let d: Vec<String> = d.iter().map(|v| v.to_string()).collect();
            write!(f, ":{}", d.join("+"))?;
        }
        Ok(())
    }
}

/// `normal·ξ + offset ≥ 0`, tagged with the index of the spec that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub source: usize,
}

impl Halfspace {
    pub fn value(&self, xi: &[f64]) -> f64 {
        self.normal.iter().zip(xi).map(|(f, x)| f * x).sum::<f64>() + self.offset
    }
}

/// An intersection of halfspaces with a stored strictly feasible point.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    dim: usize,
    halfspaces: Vec<Halfspace>,
    specs: Vec<ConstraintSpec>,
    feasible: Vec<f64>,
    grid: Option<KnotGrid>,
}

impl ConstraintSystem {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn len(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.halfspaces.is_empty()
    }

    pub fn specs(&self) -> &[ConstraintSpec] {
        &self.specs
    }

    /// The strictly interior point stored at construction.
    pub fn feasible_point(&self) -> &[f64] {
        &self.feasible
    }

    /// Builds a system from raw halfspaces; `interior` must satisfy all of them strictly.
    pub fn from_halfspaces(halfspaces: Vec<Halfspace>, interior: Vec<f64>) -> Result<Self> {
        let dim = interior.len();
        for (r, h) in halfspaces.iter().enumerate() {
            check_len(h.normal.len(), dim)?;
            if h.normal.iter().all(|&v| v == 0.0) {
                return Err(Error::ParameterDomain(format!("halfspace {r} has a zero normal")));
            }
        }
        let sys = Self { dim, halfspaces, specs: Vec::new(), feasible: interior, grid: None };
        let margin = sys.min_margin(&sys.feasible)?;
        if !(margin > 0.0) {
            return Err(Error::Infeasible(format!("supplied point is not strictly interior (margin {margin:e})")));
        }
        Ok(sys)
    }

    /// Converts the band form `l ≤ A ξ ≤ u` (infinite bounds allowed) into halfspaces.
    pub fn from_bands(a: &DMatrix<f64>, lower: &[f64], upper: &[f64], interior: Vec<f64>) -> Result<Self> {
        if a.nrows() != lower.len() || a.nrows() != upper.len() {
            return Err(Error::Shape("band bounds must match the rows of A".into()));
        }
        let mut hs = Vec::new();
        for r in 0..a.nrows() {
            let row: Vec<f64> = a.row(r).iter().copied().collect();
            if lower[r].is_finite() {
                hs.push(Halfspace { normal: row.clone(), offset: -lower[r], source: r });
            }
            if upper[r].is_finite() {
                hs.push(Halfspace { normal: row.iter().map(|v| -v).collect(), offset: upper[r], source: r });
            }
        }
        Self::from_halfspaces(hs, interior)
    }

    /// Smallest halfspace value `min_r f_r·ξ + g_r` (∞ for an empty system).
    pub fn min_margin(&self, xi: &[f64]) -> Result<f64> {
        check_len(xi.len(), self.dim)?;
        Ok(self.halfspaces.iter().map(|h| h.value(xi)).fold(f64::INFINITY, f64::min))
    }

    /// Dense `(F, g)` with one row per halfspace.
    pub fn to_matrix(&self) -> (DMatrix<f64>, DVector<f64>) {
        let p = self.halfspaces.len();
        let mut f = DMatrix::zeros(p, self.dim);
        let mut g = DVector::zeros(p);
        for (r, h) in self.halfspaces.iter().enumerate() {
            for (c, &v) in h.normal.iter().enumerate() {
                f[(r, c)] = v;
            }
            g[r] = h.offset;
        }
        (f, g)
    }

    /// A strictly interior point whose base value is `level`.
    ///
    /// Only available for systems built from named specs; raw systems return their stored
    /// point.
    pub fn interior_point(&self, level: f64) -> Result<Vec<f64>> {
        match &self.grid {
            Some(grid) => {
                let p = shaped_interior(&self.specs, grid, level);
                let margin = self.min_margin(&p)?;
                if !(margin > 0.0) {
                    return Err(Error::Infeasible(format!(
                        "no strictly interior point found for [{}] (margin {margin:e})",
                        spec_names(&self.specs)
                    )));
                }
                Ok(p)
            }
            None => Ok(self.feasible.clone()),
        }
    }
}

fn spec_names(specs: &[ConstraintSpec]) -> String {
    specs.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
}

/// Builds the halfspace system for `specs` on `grid` (intersection of all specs).
pub fn build_constraint_system(specs: &[ConstraintSpec], grid: &KnotGrid) -> Result<ConstraintSystem> {
    build_with_level(specs, grid, DEFAULT_FEASIBLE_LEVEL)
}

/// As [`build_constraint_system`], with the stored interior point at base value `level`.
pub fn build_with_level(specs: &[ConstraintSpec], grid: &KnotGrid, level: f64) -> Result<ConstraintSystem> {
    if specs.is_empty() {
        return Err(Error::ParameterDomain("at least one constraint spec required".into()));
    }
    if !(level > 0.0 && level.is_finite()) {
        return Err(Error::ParameterDomain(format!("feasible level must be positive, got {level}")));
    }
    validate_specs(specs, grid)?;

    let n = grid.size();
    let unit = |p: usize, v: f64| {
        let mut f = vec![0.0; n];
        f[p] = v;
        f
    };
    let mut hs = Vec::new();
    for (s, spec) in specs.iter().enumerate() {
        match spec.kind {
            ConstraintKind::Nonnegative => {
                for p in 0..n {
                    hs.push(Halfspace { normal: unit(p, 1.0), offset: 0.0, source: s });
                }
            }
            ConstraintKind::Bounded { lower, upper } => {
                for p in 0..n {
                    if lower.is_finite() {
                        hs.push(Halfspace { normal: unit(p, 1.0), offset: -lower, source: s });
                    }
                    if upper.is_finite() {
                        hs.push(Halfspace { normal: unit(p, -1.0), offset: upper, source: s });
                    }
                }
            }
            kind => {
                for d in (0..grid.dim()).filter(|&d| spec.applies_to(d)) {
                    let stride = grid.stride(d);
                    let m = grid.counts()[d];
                    for p in 0..n {
                        let j = grid.multi_index(p)[d];
                        let mut f = vec![0.0; n];
                        match kind {
                            ConstraintKind::Nonincreasing | ConstraintKind::Nondecreasing => {
                                if j + 1 >= m {
                                    continue;
                                }
                                let sign = if kind == ConstraintKind::Nonincreasing { 1.0 } else { -1.0 };
                                f[p] = sign;
                                f[p + stride] = -sign;
                            }
                            _ => {
                                if j == 0 || j + 1 >= m {
                                    continue;
                                }
                                let sign = if kind == ConstraintKind::Convex { 1.0 } else { -1.0 };
                                f[p - stride] = sign;
                                f[p] = -2.0 * sign;
                                f[p + stride] = sign;
                            }
                        }
                        hs.push(Halfspace { normal: f, offset: 0.0, source: s });
                    }
                }
            }
        }
    }

    let mut sys = ConstraintSystem {
        dim: n,
        halfspaces: hs,
        specs: specs.to_vec(),
        feasible: Vec::new(),
        grid: Some(grid.clone()),
    };
    sys.feasible = sys.interior_point(level)?;
    Ok(sys)
}

fn validate_specs(specs: &[ConstraintSpec], grid: &KnotGrid) -> Result<()> {
    for spec in specs {
        if let ConstraintKind::Bounded { lower, upper } = spec.kind {
            if lower.is_nan() || upper.is_nan() || lower > upper {
                return Err(Error::Infeasible(format!("bounded({lower}, {upper}) has lower > upper")));
            }
            if lower == upper {
                return Err(Error::Infeasible(format!("bounded({lower}, {upper}) leaves no interior")));
            }
        }
        if let Some(d) = &spec.dims {
            if let Some(bad) = d.iter().find(|&&d| d >= grid.dim()) {
                return Err(Error::ParameterDomain(format!(
                    "constraint '{spec}' refers to dimension {bad} of a {}-dimensional grid",
                    grid.dim()
                )));
            }
        }
    }
    for d in 0..grid.dim() {
        let has = |k: ConstraintKind| specs.iter().any(|s| s.kind == k && s.applies_to(d));
        if has(ConstraintKind::Nonincreasing) && has(ConstraintKind::Nondecreasing) {
            return Err(Error::Infeasible(format!(
                "nonincreasing and nondecreasing both requested along dimension {d}"
            )));
        }
        if has(ConstraintKind::Convex) && has(ConstraintKind::Concave) {
            return Err(Error::Infeasible(format!("convex and concave both requested along dimension {d}")));
        }
    }
    Ok(())
}

/// Deterministic interior point: a per-dimension shape (linear tilt for monotonicity,
/// quadratic for curvature) mapped affinely into the admissible value range.
fn shaped_interior(specs: &[ConstraintSpec], grid: &KnotGrid, level: f64) -> Vec<f64> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for s in specs {
        match s.kind {
            ConstraintKind::Nonnegative => lo = lo.max(0.0),
            ConstraintKind::Bounded { lower, upper } => {
                lo = lo.max(lower);
                hi = hi.min(upper);
            }
            _ => {}
        }
    }

    let has = |k: ConstraintKind, d: usize| specs.iter().any(|s| s.kind == k && s.applies_to(d));
    let shape: Vec<f64> = (0..grid.size())
        .map(|p| {
            grid.multi_index(p)
                .iter()
                .enumerate()
                .map(|(d, &j)| {
                    let u = j as f64 / (grid.counts()[d] - 1) as f64;
                    let mut v = 0.0;
                    if has(ConstraintKind::Nonincreasing, d) {
                        v += 0.5 * (1.0 - u);
                    }
                    if has(ConstraintKind::Nondecreasing, d) {
                        v += 0.5 * u;
                    }
                    if has(ConstraintKind::Convex, d) {
                        v += 0.25 * (u - 0.5).powi(2);
                    }
                    if has(ConstraintKind::Concave, d) {
                        v += 0.0625 - 0.25 * (u - 0.5).powi(2);
                    }
                    v
                })
                .sum()
        })
        .collect();
    let smin = shape.iter().copied().fold(f64::INFINITY, f64::min);
    let smax = shape.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = smax - smin;
    shape
        .into_iter()
        .map(|s| {
            let t = if span > 0.0 { (s - smin) / span } else { 0.0 };
            match (lo.is_finite(), hi.is_finite()) {
                (true, true) => lo + (hi - lo) * (0.25 + 0.5 * t),
                (true, false) => lo + level * (1.0 + t),
                (false, true) => hi - level * (2.0 - t),
                (false, false) => level * (1.0 + t),
            }
        })
        .collect()
}

/// True iff every halfspace satisfies `f·ξ + g ≥ −tol`.
pub fn check_satisfied(system: &ConstraintSystem, coeffs: &[f64], tol: f64) -> Result<bool> {
    Ok(system.min_margin(coeffs)? >= -tol)
}
