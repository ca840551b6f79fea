//! Sampled and tabulated maps, their trajectory stores and grid construction.

use crate::builtins::{self, Kind, MapRule, Rule};
use crate::error::{Error, Result};
use crate::space::{Coords, CostSpace};

/// Largest sample set accepted by default.
pub const DEFAULT_MAX_SAMPLES: usize = 200_000;

/// Inclusive range of iterate counts (maps) or time-grid steps (semiflows)
/// over which links may end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepWindow {
    pub first: usize,
    pub last: usize,
}

impl StepWindow {
    pub fn new(first: usize, last: usize) -> Self {
        assert!(first <= last, "empty step window");
        Self { first, last }
    }
}

/// Axis-aligned sampling box and spacing of a grid system.
#[derive(Debug, Clone, PartialEq)]
pub struct GridInfo {
    pub bounds: Vec<(f64, f64)>,
    pub spacing: f64,
}

/// Uniform grid over `bounds` with spacing `h`, both endpoints included,
/// ascending lexicographic order (first coordinate slowest).
pub fn grid_coords(bounds: &[(f64, f64)], h: f64, max_samples: usize) -> Result<Coords> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
    }
    if bounds.is_empty() {
        return Err(Error::InvalidGrid("box has no axes".into()));
    }
    let mut counts = Vec::with_capacity(bounds.len());
    let mut total: u128 = 1;
    for &(lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidGrid(format!("box side [{lo}, {hi}] is invalid")));
        }
        let steps = ((hi - lo) / h + 1e-9).floor();
        if steps > 1e15 {
            return Err(too_large(bounds, u128::MAX, max_samples));
        }
        let count = steps as u128 + 1;
        counts.push(count as usize);
        total = total.saturating_mul(count);
    }
    if total > max_samples as u128 {
        return Err(too_large(bounds, total, max_samples));
    }
    let dim = bounds.len();
    let total = total as usize;
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .zip(&counts)
        .map(|(&(lo, hi), &count)| {
            (0..count)
                .map(|k| {
                    let v = lo + k as f64 * h;
                    if k + 1 == count && (v - hi).abs() <= 1e-9 * h {
                        hi
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect();
    let mut data = Vec::with_capacity(total * dim);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        for (axis, &i) in idx.iter().enumerate() {
            data.push(axes[axis][i]);
        }
        for axis in (0..dim).rev() {
            idx[axis] += 1;
            if idx[axis] < counts[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
    Coords::new(dim, data)
}

fn too_large(bounds: &[(f64, f64)], requested: u128, limit: usize) -> Error {
    let dim = bounds.len() as f64;
    let per_axis = (limit as f64).powf(1.0 / dim).floor().max(2.0);
    let widest = bounds.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
    Error::GridTooLarge {
        requested,
        limit,
        required_spacing: widest / (per_axis - 1.0),
    }
}

/// Orbit of each sample under a tabulated map, stored as a rho-shaped path:
/// `path[z] = (z, f(z), ..., )` up to the first repeated point, which sits at
/// `cycle_start[z]`.
#[derive(Debug, Clone)]
pub struct TabulatedOrbits {
    paths: Vec<Vec<u32>>,
    cycle_starts: Vec<usize>,
}

impl TabulatedOrbits {
    fn new(table: &[usize]) -> Self {
        let n = table.len();
        let mut seen = vec![usize::MAX; n];
        let mut paths = Vec::with_capacity(n);
        let mut cycle_starts = Vec::with_capacity(n);
        for z in 0..n {
            let mut path: Vec<u32> = Vec::new();
            let mut cur = z;
            while seen[cur] != z {
                seen[cur] = z;
                path.push(cur as u32);
                cur = table[cur];
            }
            let start = path.iter().position(|&p| p as usize == cur).unwrap();
            paths.push(path);
            cycle_starts.push(start);
        }
        Self {
            paths,
            cycle_starts,
        }
    }

    /// `f^n(z)`.
    pub fn entry(&self, z: usize, n: usize) -> usize {
        let path = &self.paths[z];
        if n < path.len() {
            return path[n] as usize;
        }
        let start = self.cycle_starts[z];
        let period = path.len() - start;
        path[start + (n - start) % period] as usize
    }

    /// Distinct points `f^n(z)` with `n` in the window, each with the
    /// first `n` at which it is visited, in increasing `n`.
    pub fn first_visits(&self, z: usize, window: StepWindow) -> Vec<(usize, usize)> {
        let path_len = self.paths[z].len();
        let last = window.last.min(window.first + path_len);
        let mut out: Vec<(usize, usize)> = Vec::new();
        for n in window.first..=last {
            let w = self.entry(z, n);
            if !out.iter().any(|&(_, v)| v == w) {
                out.push((n, w));
            }
        }
        out
    }
}

/// Raw iterates, `steps + 1` points per sample (step 0 is the sample).
#[derive(Debug, Clone)]
pub struct SampledTrajectories {
    dim: usize,
    steps: usize,
    data: Vec<f64>,
}

impl SampledTrajectories {
    pub(crate) fn from_parts(dim: usize, steps: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len() % (dim * (steps + 1)), 0);
        Self { dim, steps, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Point reached by sample `z` after `k` steps.
    #[inline]
    pub fn point(&self, z: usize, k: usize) -> &[f64] {
        let stride = self.dim * (self.steps + 1);
        let off = z * stride + k * self.dim;
        &self.data[off..off + self.dim]
    }
}

/// Where each sample's orbit goes: sample ids for tabulated systems, raw
/// coordinates for sampled ones. Entries are never snapped to the grid.
#[derive(Debug, Clone)]
pub enum TrajectoryStore {
    Tabulated(TabulatedOrbits),
    Sampled(SampledTrajectories),
}

/// End point of an orbit segment.
#[derive(Debug, Clone, Copy)]
pub enum Exit<'a> {
    Sample(usize),
    Point(&'a [f64]),
}

/// Orbit data and link window shared by maps and semiflows.
pub trait Dynamics: Sync {
    fn name(&self) -> &str;
    fn space(&self) -> &CostSpace;
    fn trajectories(&self) -> &TrajectoryStore;
    /// Link durations used by default.
    fn link_window(&self) -> StepWindow;
    fn grid(&self) -> Option<&GridInfo>;

    fn grid_spacing(&self) -> Option<f64> {
        self.grid().map(|g| g.spacing)
    }

    /// Default Omega_0 gate: `2h` on grids, exactly 0 for tables.
    fn default_tolerance(&self) -> f64 {
        self.grid_spacing().map_or(0.0, |h| 2.0 * h)
    }

    /// Window with the upper end halved (not below the lower end).
    fn half_window(&self) -> StepWindow {
        let w = self.link_window();
        StepWindow::new(w.first, (w.last / 2).max(w.first))
    }
}

#[derive(Debug, Clone)]
enum Step {
    Table(Vec<usize>),
    Rule(MapRule),
}

/// A map on a finite sample set with its trajectory store.
#[derive(Debug, Clone)]
pub struct MapSystem {
    name: String,
    space: CostSpace,
    step: Step,
    horizon: usize,
    grid: Option<GridInfo>,
    trajectories: TrajectoryStore,
}

impl MapSystem {
    /// Map given by an index table `table[x] = f(x)`.
    pub fn tabulated(
        name: impl Into<String>,
        space: CostSpace,
        table: Vec<usize>,
        horizon: usize,
    ) -> Result<Self> {
        if space.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        if table.len() != space.len() {
            return Err(Error::InvalidSystem(format!(
                "map table has {} entries for {} points",
                table.len(),
                space.len()
            )));
        }
        if let Some(&bad) = table.iter().find(|&&t| t >= space.len()) {
            return Err(Error::SampleOutOfRange {
                index: bad,
                len: space.len(),
            });
        }
        check_horizon(horizon)?;
        let orbits = TabulatedOrbits::new(&table);
        Ok(Self {
            name: name.into(),
            space,
            step: Step::Table(table),
            horizon,
            grid: None,
            trajectories: TrajectoryStore::Tabulated(orbits),
        })
    }

    /// Map given by a rule on coordinates, iterated from every sample with
    /// raw (unsnapped) images.
    pub fn sampled(
        name: impl Into<String>,
        space: CostSpace,
        rule: MapRule,
        horizon: usize,
        grid: Option<GridInfo>,
    ) -> Result<Self> {
        if space.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        if !space.is_euclidean() {
            return Err(Error::InvalidSystem(
                "sampled maps need a Euclidean embedded space".into(),
            ));
        }
        check_horizon(horizon)?;
        let coords = space.coords().unwrap();
        let dim = coords.dim();
        let mut data = Vec::with_capacity(space.len() * dim * (horizon + 1));
        let mut cur = vec![0.0; dim];
        let mut next = vec![0.0; dim];
        for z in 0..space.len() {
            cur.copy_from_slice(coords.point(z));
            data.extend_from_slice(&cur);
            for _ in 0..horizon {
                rule.eval(&cur, &mut next);
                data.extend_from_slice(&next);
                std::mem::swap(&mut cur, &mut next);
            }
        }
        Ok(Self {
            name: name.into(),
            space,
            step: Step::Rule(rule),
            horizon,
            grid,
            trajectories: TrajectoryStore::Sampled(SampledTrajectories::from_parts(
                dim, horizon, data,
            )),
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn table(&self) -> Option<&[usize]> {
        match &self.step {
            Step::Table(t) => Some(t),
            Step::Rule(_) => None,
        }
    }

    pub fn rule(&self) -> Option<MapRule> {
        match &self.step {
            Step::Rule(r) => Some(*r),
            Step::Table(_) => None,
        }
    }

    /// Same system with a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        match &self.step {
            Step::Table(t) => Self::tabulated(&self.name, self.space.clone(), t.clone(), horizon),
            Step::Rule(r) => {
                Self::sampled(&self.name, self.space.clone(), *r, horizon, self.grid.clone())
            }
        }
    }

    /// `f^n(z)` as a sample id (tabulated systems only).
    pub fn iterate_index(&self, z: usize, n: usize) -> Option<usize> {
        match &self.trajectories {
            TrajectoryStore::Tabulated(o) => Some(o.entry(z, n)),
            TrajectoryStore::Sampled(_) => None,
        }
    }

    /// Whether the tabulated map is a bijection.
    pub fn is_permutation(&self) -> bool {
        match &self.step {
            Step::Table(t) => {
                let mut hit = vec![false; t.len()];
                t.iter().all(|&i| !std::mem::replace(&mut hit[i], true))
            }
            Step::Rule(_) => false,
        }
    }
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidSystem("horizon must be at least 1".into()));
    }
    Ok(())
}

impl Dynamics for MapSystem {
    fn name(&self) -> &str {
        &self.name
    }

    fn space(&self) -> &CostSpace {
        &self.space
    }

    fn trajectories(&self) -> &TrajectoryStore {
        &self.trajectories
    }

    fn link_window(&self) -> StepWindow {
        StepWindow::new(1, self.horizon)
    }

    fn grid(&self) -> Option<&GridInfo> {
        self.grid.as_ref()
    }
}

/// Uniform-grid sample of a builtin map over `bounds` (one pair per axis).
pub fn build_grid_system(
    builtin_name: &str,
    bounds: &[(f64, f64)],
    spacing: f64,
    horizon: usize,
    max_samples: usize,
) -> Result<MapSystem> {
    let sys = builtins::builtin(builtin_name)?;
    let rule = match (sys.kind, sys.rule) {
        (Kind::Map, Rule::Map(rule)) => rule,
        (Kind::Map, _) => {
            return Err(Error::InvalidSystem(format!(
                "`{builtin_name}` is tabulated and has no grid form"
            )))
        }
        (Kind::Semiflow, _) => {
            return Err(Error::InvalidSystem(format!(
                "`{builtin_name}` is a semiflow; use the flow builder"
            )))
        }
    };
    let coords = grid_coords(bounds, spacing, max_samples)?;
    let space = CostSpace::euclidean(coords);
    let grid = GridInfo {
        bounds: bounds.to_vec(),
        spacing,
    };
    MapSystem::sampled(builtin_name, space, rule, horizon, Some(grid))
}
