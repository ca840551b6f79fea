//! Finite point sets with a cost function into `[0, inf]`.

use crate::error::{Error, Result};

/// Sample coordinates, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Coords {
    dim: usize,
    data: Vec<f64>,
}

impl Coords {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::InvalidSystem(format!(
                "{} coordinates cannot be split into points of dimension {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSystem("non-finite sample coordinate".into()));
        }
        Ok(Self { dim, data })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(1);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidSystem("points have mixed dimensions".into()));
        }
        Self::new(dim, points.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Euclidean distance. In one dimension this is exactly `|a - b|`.
#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq)]
enum CostFn {
    Euclidean,
    /// Row-major `len x len` matrix, `+inf` allowed.
    Matrix(Vec<f64>),
}

/// A finite set of states with a cost on ordered pairs.
///
/// `is_metric` and `is_non_degenerate` are claims made by the constructor's
/// caller; [`validate_cost_space`] checks them by full scan.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpace {
    len: usize,
    coords: Option<Coords>,
    cost: CostFn,
    is_metric: bool,
    is_non_degenerate: bool,
}

impl CostSpace {
    /// Euclidean cost on embedded points. Coincident points make the space
    /// degenerate, which is detected here.
    pub fn euclidean(coords: Coords) -> Self {
        let mut space = Self {
            len: coords.len(),
            coords: Some(coords),
            cost: CostFn::Euclidean,
            is_metric: true,
            is_non_degenerate: true,
        };
        if space.len <= 4096 {
            space.is_non_degenerate = validate_cost_space(&space).non_degenerate.is_none();
        }
        space
    }

    /// Explicit cost matrix (row-major, `costs[x * len + y] = c(x, y)`).
    /// Flags are computed by full scan.
    pub fn from_matrix(len: usize, costs: Vec<f64>, coords: Option<Coords>) -> Result<Self> {
        if costs.len() != len * len {
            return Err(Error::InvalidSystem(format!(
                "cost matrix has {} entries, expected {}",
                costs.len(),
                len * len
            )));
        }
        if let Some(c) = &coords {
            if c.len() != len {
                return Err(Error::InvalidSystem("coordinate count mismatch".into()));
            }
        }
        for (k, &v) in costs.iter().enumerate() {
            if v.is_nan() || v < 0.0 {
                return Err(Error::InvalidSystem(format!(
                    "cost ({}, {}) = {v} is not in [0, inf]",
                    k / len,
                    k % len
                )));
            }
            if k / len == k % len && v != 0.0 {
                return Err(Error::InvalidSystem(format!(
                    "cost ({0}, {0}) must be 0",
                    k / len
                )));
            }
        }
        let mut space = Self {
            len,
            coords,
            cost: CostFn::Matrix(costs),
            is_metric: false,
            is_non_degenerate: false,
        };
        let report = validate_cost_space(&space);
        space.is_non_degenerate = report.non_degenerate.is_none();
        space.is_metric = report.is_metric();
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn coords(&self) -> Option<&Coords> {
        self.coords.as_ref()
    }

    pub fn dim(&self) -> Option<usize> {
        self.coords.as_ref().map(Coords::dim)
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.cost, CostFn::Euclidean)
    }

    pub fn is_metric(&self) -> bool {
        self.is_metric
    }

    pub fn is_non_degenerate(&self) -> bool {
        self.is_non_degenerate
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.cost {
            CostFn::Euclidean => true,
            CostFn::Matrix(_) => validate_cost_space(self).symmetry.is_none(),
        }
    }

    /// `c(x, y)`.
    #[inline]
    pub fn cost(&self, x: usize, y: usize) -> f64 {
        match &self.cost {
            CostFn::Euclidean => {
                let c = self.coords.as_ref().expect("euclidean space has coordinates");
                euclidean(c.point(x), c.point(y))
            }
            CostFn::Matrix(m) => m[x * self.len + y],
        }
    }

    /// Cost matrix as a dense row-major vector.
    pub fn cost_matrix(&self) -> Vec<f64> {
        match &self.cost {
            CostFn::Matrix(m) => m.clone(),
            CostFn::Euclidean => (0..self.len * self.len)
                .map(|k| self.cost(k / self.len, k % self.len))
                .collect(),
        }
    }

    /// Index of the sample closest to `point` (ties to the smaller index).
    pub fn nearest_sample(&self, point: &[f64]) -> Option<usize> {
        let c = self.coords.as_ref()?;
        (0..self.len)
            .map(|i| (euclidean(c.point(i), point), i))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, i)| i)
    }
}

/// Outcome of [`validate_cost_space`]; each field holds a counterexample
/// when the property fails.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub non_degenerate: Option<(usize, usize)>,
    pub symmetry: Option<(usize, usize)>,
    pub triangle: Option<(usize, usize, usize)>,
}

impl ValidationReport {
    pub fn is_metric(&self) -> bool {
        self.non_degenerate.is_none() && self.symmetry.is_none() && self.triangle.is_none()
    }
}

/// Full scan for non-degeneracy, symmetry and the triangle inequality. The
/// triangle witness `(a, b, c)` satisfies `c(a, c) > c(a, b) + c(b, c)`.
pub fn validate_cost_space(space: &CostSpace) -> ValidationReport {
    let n = space.len();
    let costs = space.cost_matrix();
    let c = |x: usize, y: usize| costs[x * n + y];
    let mut report = ValidationReport::default();
    for a in 0..n {
        for b in 0..n {
            if a != b && c(a, b) == 0.0 && report.non_degenerate.is_none() {
                report.non_degenerate = Some((a, b));
            }
            if c(a, b) != c(b, a) && report.symmetry.is_none() {
                report.symmetry = Some((a, b));
            }
        }
    }
    let tol = |v: f64| 1e-12 * v.abs().max(1.0);
    'outer: for a in 0..n {
        for b in 0..n {
            for d in 0..n {
                let via = c(a, b) + c(b, d);
                if c(a, d) > via + tol(via) {
                    report.triangle = Some((a, b, d));
                    break 'outer;
                }
            }
        }
    }
    report
}
