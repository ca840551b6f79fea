//! Minimal link levels between samples.
//!
//! A link from `x` to `y` starts at a sample `z` with entry cost `c(x, z)`,
//! follows the orbit of `z` for `n` steps in the link window, and exits with
//! cost `c(f^n(z), y)`. The link level is the smallest achievable
//! `max(entry, exit)`:
//!
//! ```text
//! L(x, y) = min_{z, n} max(c(x, z), c(f^n(z), y))
//! ```
//!
//! Thresholds are closed: an eps-link exists iff `L(x, y) <= eps`. On a
//! finite sample set the minimum is attained, so the relations "for every
//! eps' > eps there is an eps'-link" and "there is an eps-link" coincide and
//! both read `L(x, y) <= eps`.
//!
//! Witnesses are chosen by smallest level, then smallest `n`, then smallest
//! sample index.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::space::{euclidean, CostSpace};
use crate::spatial::BucketIndex;
use crate::system::{Dynamics, Exit, StepWindow, TrajectoryStore};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkWitness {
    pub start_index: usize,
    pub steps: usize,
    pub start_cost: f64,
    pub end_cost: f64,
    pub level: f64,
}

impl LinkWitness {
    fn key(&self) -> (f64, usize, usize) {
        (self.level, self.steps, self.start_index)
    }

    fn beats(&self, other: &LinkWitness) -> bool {
        let (a, b) = (self.key(), other.key());
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
            .is_lt()
    }
}

#[inline]
fn exit_at<'a>(traj: &'a TrajectoryStore, z: usize, n: usize) -> Exit<'a> {
    match traj {
        TrajectoryStore::Tabulated(o) => Exit::Sample(o.entry(z, n)),
        TrajectoryStore::Sampled(t) => Exit::Point(t.point(z, n)),
    }
}

#[inline]
fn exit_cost(space: &CostSpace, exit: Exit<'_>, y: usize) -> f64 {
    match exit {
        Exit::Sample(w) => space.cost(w, y),
        Exit::Point(p) => euclidean(p, space.coords().expect("embedded space").point(y)),
    }
}

fn check_sample(space: &CostSpace, i: usize) -> Result<()> {
    if i >= space.len() {
        return Err(Error::SampleOutOfRange {
            index: i,
            len: space.len(),
        });
    }
    Ok(())
}

/// Link level from `x` to `y` over the system's default window, by direct
/// enumeration of every start sample and step count.
pub fn link_level<D: Dynamics + ?Sized>(sys: &D, x: usize, y: usize) -> Result<(f64, LinkWitness)> {
    link_level_in(sys, sys.link_window(), x, y)
}

/// [`link_level`] over an explicit window.
pub fn link_level_in<D: Dynamics + ?Sized>(
    sys: &D,
    window: StepWindow,
    x: usize,
    y: usize,
) -> Result<(f64, LinkWitness)> {
    let space = sys.space();
    if space.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    check_sample(space, x)?;
    check_sample(space, y)?;
    let traj = sys.trajectories();
    let mut best: Option<LinkWitness> = None;
    for z in 0..space.len() {
        let start_cost = space.cost(x, z);
        for n in window.first..=window.last {
            let end_cost = exit_cost(space, exit_at(traj, z, n), y);
            let cand = LinkWitness {
                start_index: z,
                steps: n,
                start_cost,
                end_cost,
                level: start_cost.max(end_cost),
            };
            if best.as_ref().is_none_or(|b| cand.beats(b)) {
                best = Some(cand);
            }
        }
    }
    let w = best.expect("non-empty sample set and window");
    Ok((w.level, w))
}

#[derive(Debug, Clone, Copy)]
pub struct MatrixOptions {
    /// Step window; the system default when `None`.
    pub window: Option<StepWindow>,
    /// Use a bucket grid for nearest-iterate queries on sampled systems.
    pub spatial_index: bool,
}

impl Default for MatrixOptions {
    fn default() -> Self {
        Self {
            window: None,
            spatial_index: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct CompactWitness {
    z: u32,
    n: u32,
    start: f64,
    end: f64,
}

/// `L(x, y)` for every ordered pair of target samples, with witnesses.
#[derive(Debug, Clone)]
pub struct LevelMatrix {
    n_samples: usize,
    targets: Vec<usize>,
    position: Vec<u32>,
    levels: Vec<f64>,
    witnesses: Vec<CompactWitness>,
    window: StepWindow,
    grid_spacing: Option<f64>,
}

const ABSENT: u32 = u32::MAX;

impl LevelMatrix {
    /// Sample ids covered, ascending.
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn window(&self) -> StepWindow {
        self.window
    }

    pub fn grid_spacing(&self) -> Option<f64> {
        self.grid_spacing
    }

    pub fn is_complete(&self) -> bool {
        self.targets.len() == self.n_samples
    }

    pub fn covers(&self, x: usize) -> bool {
        self.position.get(x).is_some_and(|&p| p != ABSENT)
    }

    fn pos(&self, x: usize) -> Result<usize> {
        match self.position.get(x) {
            Some(&p) if p != ABSENT => Ok(p as usize),
            _ => Err(Error::NotCovered(x)),
        }
    }

    /// `L(x, y)`; panics when either sample is not covered.
    pub fn level(&self, x: usize, y: usize) -> f64 {
        self.try_level(x, y).expect("sample not covered by matrix")
    }

    pub fn try_level(&self, x: usize, y: usize) -> Result<f64> {
        let k = self.targets.len();
        Ok(self.levels[self.pos(x)? * k + self.pos(y)?])
    }

    pub fn witness(&self, x: usize, y: usize) -> Result<LinkWitness> {
        let k = self.targets.len();
        let w = self.witnesses[self.pos(x)? * k + self.pos(y)?];
        Ok(LinkWitness {
            start_index: w.z as usize,
            steps: w.n as usize,
            start_cost: w.start,
            end_cost: w.end,
            level: w.start.max(w.end),
        })
    }

    /// Row-major levels over `targets()`.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// `{y : L(x, y) <= eps}` among the covered samples, ascending.
    pub fn reachable_set(&self, x: usize, eps: f64) -> Result<Vec<usize>> {
        let k = self.targets.len();
        let row = self.pos(x)? * k;
        Ok(self
            .targets
            .iter()
            .enumerate()
            .filter(|&(j, _)| self.levels[row + j] <= eps)
            .map(|(_, &y)| y)
            .collect())
    }
}

/// Free-function form of [`LevelMatrix::reachable_set`].
pub fn reachable_set(matrix: &LevelMatrix, x: usize, eps: f64) -> Result<Vec<usize>> {
    matrix.reachable_set(x, eps)
}

/// Nearest exit of every start sample to every target:
/// `D(z, y) = min_n c(f^n(z), y)`, with the first `n` attaining it.
struct NearestExits {
    n_targets: usize,
    dist: Vec<f64>,
    step: Vec<u32>,
}

fn nearest_exits<D: Dynamics + ?Sized>(
    sys: &D,
    targets: &[usize],
    window: StepWindow,
    spatial_index: bool,
) -> NearestExits {
    let space = sys.space();
    let traj = sys.trajectories();
    let k = targets.len();
    let rows: Vec<(Vec<f64>, Vec<u32>)> = (0..space.len())
        .into_par_iter()
        .map(|z| {
            let mut dist = vec![f64::INFINITY; k];
            let mut step = vec![u32::MAX; k];
            match traj {
                TrajectoryStore::Tabulated(o) => {
                    let visits = o.first_visits(z, window);
                    for (j, &y) in targets.iter().enumerate() {
                        let mut best = (f64::INFINITY, usize::MAX);
                        for &(n, w) in &visits {
                            let d = space.cost(w, y);
                            if d.total_cmp(&best.0).then(n.cmp(&best.1)).is_lt() {
                                best = (d, n);
                            }
                        }
                        dist[j] = best.0;
                        step[j] = best.1 as u32;
                    }
                }
                TrajectoryStore::Sampled(t) => {
                    let coords = space.coords().expect("embedded space");
                    if spatial_index {
                        let (origin, cell) = index_geometry(sys);
                        let index = BucketIndex::new(
                            t.dim(),
                            cell,
                            &origin,
                            (window.first..=window.last).map(|n| (n as u32, t.point(z, n))),
                        );
                        for (j, &y) in targets.iter().enumerate() {
                            let (d, n) = index.nearest(coords.point(y)).expect("non-empty window");
                            dist[j] = d;
                            step[j] = n;
                        }
                    } else {
                        for (j, &y) in targets.iter().enumerate() {
                            let q = coords.point(y);
                            let mut best = (f64::INFINITY, u32::MAX);
                            for n in window.first..=window.last {
                                let d = euclidean(t.point(z, n), q);
                                if d.total_cmp(&best.0).then((n as u32).cmp(&best.1)).is_lt() {
                                    best = (d, n as u32);
                                }
                            }
                            dist[j] = best.0;
                            step[j] = best.1;
                        }
                    }
                }
            }
            (dist, step)
        })
        .collect();
    let mut dist = Vec::with_capacity(space.len() * k);
    let mut step = Vec::with_capacity(space.len() * k);
    for (d, s) in rows {
        dist.extend(d);
        step.extend(s);
    }
    NearestExits {
        n_targets: k,
        dist,
        step,
    }
}

fn index_geometry<D: Dynamics + ?Sized>(sys: &D) -> (Vec<f64>, f64) {
    let coords = sys.space().coords().expect("embedded space");
    let dim = coords.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for i in 0..coords.len() {
        for (a, &v) in coords.point(i).iter().enumerate() {
            lo[a] = lo[a].min(v);
            hi[a] = hi[a].max(v);
        }
    }
    let extent = lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max);
    let cell = sys
        .grid_spacing()
        .map(|h| 4.0 * h)
        .unwrap_or_else(|| extent / (coords.len() as f64).powf(1.0 / dim as f64));
    (lo, if cell > 0.0 { cell } else { 1.0 })
}

/// First `n` in the window whose exit cost to `y` is at most `threshold`.
fn first_exit_within(
    space: &CostSpace,
    traj: &TrajectoryStore,
    window: StepWindow,
    z: usize,
    y: usize,
    threshold: f64,
) -> (usize, f64) {
    match traj {
        TrajectoryStore::Tabulated(o) => {
            for (n, w) in o.first_visits(z, window) {
                let d = space.cost(w, y);
                if d <= threshold {
                    return (n, d);
                }
            }
        }
        TrajectoryStore::Sampled(_) => {
            for n in window.first..=window.last {
                let d = exit_cost(space, exit_at(traj, z, n), y);
                if d <= threshold {
                    return (n, d);
                }
            }
        }
    }
    unreachable!("threshold is at least the nearest exit cost")
}

/// Level matrix over `targets` (all samples when `None`); start samples
/// always range over the whole sample set. Rows are computed in parallel
/// and the result does not depend on scheduling.
pub fn level_matrix<D: Dynamics + ?Sized>(
    sys: &D,
    targets: Option<&[usize]>,
    options: &MatrixOptions,
) -> Result<LevelMatrix> {
    let space = sys.space();
    if space.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let mut targets: Vec<usize> = match targets {
        Some(t) => t.to_vec(),
        None => (0..space.len()).collect(),
    };
    targets.sort_unstable();
    targets.dedup();
    if targets.is_empty() {
        return Err(Error::EmptyTargets);
    }
    for &t in &targets {
        check_sample(space, t)?;
    }
    let window = options.window.unwrap_or_else(|| sys.link_window());
    let traj = sys.trajectories();
    let exits = nearest_exits(sys, &targets, window, options.spatial_index);
    let k = targets.len();

    let rows: Vec<Vec<CompactWitness>> = targets
        .par_iter()
        .map(|&x| {
            let entry: Vec<f64> = (0..space.len()).map(|z| space.cost(x, z)).collect();
            let mut order: Vec<usize> = (0..space.len()).collect();
            order.sort_by(|&a, &b| entry[a].total_cmp(&entry[b]).then(a.cmp(&b)));

            let unset = LinkWitness {
                start_index: usize::MAX,
                steps: usize::MAX,
                start_cost: f64::INFINITY,
                end_cost: f64::INFINITY,
                level: f64::INFINITY,
            };
            let mut best = vec![unset; k];
            let mut active: Vec<usize> = (0..k).collect();
            for (i, &z) in order.iter().enumerate() {
                let c = entry[z];
                let drow = z * exits.n_targets;
                for &j in &active {
                    let d = exits.dist[drow + j];
                    let level = c.max(d);
                    if level > best[j].level {
                        continue;
                    }
                    let (n, end) = if c <= d {
                        (exits.step[drow + j] as usize, d)
                    } else {
                        first_exit_within(space, traj, window, z, targets[j], c)
                    };
                    let cand = LinkWitness {
                        start_index: z,
                        steps: n,
                        start_cost: c,
                        end_cost: end,
                        level,
                    };
                    if cand.beats(&best[j]) {
                        best[j] = cand;
                    }
                }
                // later starts cost at least the next entry cost
                if let Some(&next) = order.get(i + 1) {
                    let next_c = entry[next];
                    active.retain(|&j| best[j].level >= next_c);
                    if active.is_empty() {
                        break;
                    }
                }
            }
            best.into_iter()
                .map(|w| CompactWitness {
                    z: w.start_index as u32,
                    n: w.steps as u32,
                    start: w.start_cost,
                    end: w.end_cost,
                })
                .collect()
        })
        .collect();

    let mut levels = Vec::with_capacity(k * k);
    let mut witnesses = Vec::with_capacity(k * k);
    for row in rows {
        for w in row {
            levels.push(w.start.max(w.end));
            witnesses.push(w);
        }
    }
    let mut position = vec![ABSENT; space.len()];
    for (p, &t) in targets.iter().enumerate() {
        position[t] = p as u32;
    }
    Ok(LevelMatrix {
        n_samples: space.len(),
        targets,
        position,
        levels,
        witnesses,
        window,
        grid_spacing: sys.grid_spacing(),
    })
}

/// Pairs whose level changes when the link window's upper end is halved.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonStability {
    pub full_window: StepWindow,
    pub half_window: StepWindow,
    pub changed_pairs: Vec<(usize, usize)>,
}

impl HorizonStability {
    pub fn is_stable(&self) -> bool {
        self.changed_pairs.is_empty()
    }
}

/// Recomputes `matrix` with the halved window and lists the pairs whose
/// level differs.
pub fn horizon_stability<D: Dynamics + ?Sized>(
    sys: &D,
    matrix: &LevelMatrix,
    options: &MatrixOptions,
) -> Result<HorizonStability> {
    let full = matrix.window();
    let half = StepWindow::new(full.first, (full.last / 2).max(full.first));
    let halved = level_matrix(
        sys,
        Some(matrix.targets()),
        &MatrixOptions {
            window: Some(half),
            ..*options
        },
    )?;
    let t = matrix.targets();
    let mut changed = Vec::new();
    for (i, &x) in t.iter().enumerate() {
        for (j, &y) in t.iter().enumerate() {
            let a = matrix.levels[i * t.len() + j];
            let b = halved.levels[i * t.len() + j];
            if a.to_bits() != b.to_bits() {
                changed.push((x, y));
            }
        }
    }
    Ok(HorizonStability {
        full_window: full,
        half_window: half,
        changed_pairs: changed,
    })
}
