//! Non-wandering and robustness levels, filtration slices and diagrams.
//!
//! For a sample `x` with link levels `L`:
//!
//! * `lambda(x) = L(x, x)`; `x` lies in the positive slice at `eps` iff
//!   `lambda(x) <= eps`.
//! * `beta(x) = min { L(x, y) : L(y, x) > L(x, y) }` (`inf` if no such `y`),
//!   defined only when `lambda(x) <= tau`. Then `x` lies in the negative
//!   slice at `-eps` iff `eps < beta(x)`: every point reachable from `x`
//!   within a budget `eps' <= eps` can come back within the same budget.
//!
//! `tau` is the tolerance of the `Omega_0` gate. It is `0` for tabulated
//! systems and `2h` on grids, where discretisation lifts `lambda` slightly
//! above zero at genuinely non-wandering points. Positive slices below
//! `tau` are read at `tau` so that `-0` and `+0` stay nested.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::level::{Branch, ExtendedLevel};
use crate::link::LevelMatrix;
use crate::space::CostSpace;

/// Membership rule at the boundary `eps = beta(x)` of a negative slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NegBoundary {
    /// `eps < beta(x)`; the exact finite reduction.
    #[default]
    Strict,
    /// `eps <= beta(x)`; matches closed-form diagrams drawn with closed ends.
    Closed,
}

/// Per-sample `lambda` and `beta` over the samples covered by a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    targets: Vec<usize>,
    position: Vec<Option<usize>>,
    lambda: Vec<f64>,
    beta: Vec<Option<f64>>,
    minus_zero: Vec<bool>,
    zero_tol: f64,
    boundary: NegBoundary,
}

impl LevelSummary {
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn zero_tol(&self) -> f64 {
        self.zero_tol
    }

    pub fn boundary(&self) -> NegBoundary {
        self.boundary
    }

    pub fn with_boundary(mut self, boundary: NegBoundary) -> Self {
        self.boundary = boundary;
        self
    }

    fn pos(&self, x: usize) -> Result<usize> {
        self.position
            .get(x)
            .copied()
            .flatten()
            .ok_or(Error::NotCovered(x))
    }

    pub fn lambda(&self, x: usize) -> Result<f64> {
        Ok(self.lambda[self.pos(x)?])
    }

    /// `None` when `beta` is undefined (`lambda(x) > tau`).
    pub fn beta(&self, x: usize) -> Result<Option<f64>> {
        Ok(self.beta[self.pos(x)?])
    }

    /// Whether `L(x, y) <= tau` implies `L(y, x) <= tau` for all `y`: the
    /// `-0` relation of `x` with itself, with or without `x` in `Omega_0`.
    pub fn minus_zero_relation_holds(&self, x: usize) -> Result<bool> {
        Ok(self.minus_zero[self.pos(x)?])
    }

    /// `(sample, lambda, beta)` in sample order.
    pub fn rows(&self) -> impl Iterator<Item = (usize, f64, Option<f64>)> + '_ {
        self.targets
            .iter()
            .enumerate()
            .map(|(i, &x)| (x, self.lambda[i], self.beta[i]))
    }

    fn member_at(&self, i: usize, level: &ExtendedLevel) -> bool {
        let m = level.magnitude();
        match level.branch() {
            Branch::Pos => self.lambda[i] <= m.max(self.zero_tol),
            Branch::Neg => match (self.beta[i], self.boundary) {
                (None, _) => false,
                (Some(b), NegBoundary::Strict) => m < b,
                (Some(b), NegBoundary::Closed) => m <= b,
            },
        }
    }
}

/// `lambda(x) = L(x, x)`.
pub fn nw_level(matrix: &LevelMatrix, x: usize) -> Result<f64> {
    matrix.try_level(x, x)
}

/// `beta(x)` over the samples covered by `matrix`, or `None` when
/// `lambda(x) > zero_tol`.
pub fn robustness_level(matrix: &LevelMatrix, zero_tol: f64, x: usize) -> Result<Option<f64>> {
    if matrix.try_level(x, x)? > zero_tol {
        return Ok(None);
    }
    let mut beta = f64::INFINITY;
    for &y in matrix.targets() {
        let there = matrix.level(x, y);
        if matrix.level(y, x) > there {
            beta = beta.min(there);
        }
    }
    Ok(Some(beta))
}

fn minus_zero_relation(matrix: &LevelMatrix, zero_tol: f64, x: usize) -> bool {
    matrix
        .targets()
        .iter()
        .all(|&y| matrix.level(x, y) > zero_tol || matrix.level(y, x) <= zero_tol)
}

/// `lambda` and `beta` for every covered sample.
pub fn summarize(matrix: &LevelMatrix, zero_tol: f64) -> Result<LevelSummary> {
    if !(zero_tol >= 0.0) {
        return Err(Error::InvalidSystem(format!(
            "zero tolerance must be non-negative, got {zero_tol}"
        )));
    }
    let targets = matrix.targets().to_vec();
    let mut position = vec![None; matrix.n_samples()];
    for (i, &x) in targets.iter().enumerate() {
        position[x] = Some(i);
    }
    let mut lambda = Vec::with_capacity(targets.len());
    let mut beta = Vec::with_capacity(targets.len());
    let mut minus_zero = Vec::with_capacity(targets.len());
    for &x in &targets {
        lambda.push(nw_level(matrix, x)?);
        beta.push(robustness_level(matrix, zero_tol, x)?);
        minus_zero.push(minus_zero_relation(matrix, zero_tol, x));
    }
    Ok(LevelSummary {
        targets,
        position,
        lambda,
        beta,
        minus_zero,
        zero_tol,
        boundary: NegBoundary::Strict,
    })
}

/// Whether `x` lies in the slice at `level`.
pub fn omega_membership(summary: &LevelSummary, x: usize, level: ExtendedLevel) -> Result<bool> {
    Ok(summary.member_at(summary.pos(x)?, &level))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagramSlice {
    pub level: ExtendedLevel,
    /// Sample ids, ascending.
    pub members: Vec<usize>,
}

/// One slice per level; `levels` must be ascending in the extended order.
pub fn diagram(summary: &LevelSummary, levels: &[ExtendedLevel]) -> Result<Vec<DiagramSlice>> {
    if let Some(i) = levels.windows(2).position(|w| w[0] > w[1]) {
        return Err(Error::UnsortedLevels(i + 1));
    }
    Ok(levels
        .iter()
        .map(|level| DiagramSlice {
            level: *level,
            members: summary
                .targets
                .iter()
                .enumerate()
                .filter(|&(i, _)| summary.member_at(i, level))
                .map(|(_, &x)| x)
                .collect(),
        })
        .collect())
}

/// Sorted distinct values at which some slice can change: every
/// `lambda(x)` and every `L(x, y)` with `L(y, x) > L(x, y)`.
pub fn critical_levels(matrix: &LevelMatrix) -> Vec<f64> {
    let mut values = BTreeSet::new();
    let t = matrix.targets();
    for &x in t {
        values.insert(matrix.level(x, x).to_bits());
        for &y in t {
            let there = matrix.level(x, y);
            if matrix.level(y, x) > there {
                values.insert(there.to_bits());
            }
        }
    }
    let mut out: Vec<f64> = values.into_iter().map(f64::from_bits).collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Runs of consecutive members of a one-dimensional sample set as
/// coordinate intervals `[lo, hi]`. Members must be ascending.
pub fn intervals_1d(space: &CostSpace, members: &[usize]) -> Result<Vec<(f64, f64)>> {
    let coords = space.coords().ok_or(Error::NotOneDimensional(0))?;
    if coords.dim() != 1 {
        return Err(Error::NotOneDimensional(coords.dim()));
    }
    let mut out = Vec::new();
    let mut run: Option<(usize, usize)> = None;
    for &m in members {
        run = match run {
            Some((s, e)) if m == e + 1 => Some((s, m)),
            Some((s, e)) => {
                out.push((coords.point(s)[0], coords.point(e)[0]));
                Some((m, m))
            }
            None => Some((m, m)),
        };
    }
    if let Some((s, e)) = run {
        out.push((coords.point(s)[0], coords.point(e)[0]));
    }
    Ok(out)
}
