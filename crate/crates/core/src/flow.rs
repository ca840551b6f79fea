//! Semiflows sampled on a time grid.
//!
//! Every sample is integrated with fixed-step RK4 up to `t_max`; the stored
//! trajectory holds the states at `0, dt, 2 dt, ..., K dt` with
//! `K = t_max / dt`. A link of duration at least `T` exits after `r` steps
//! with `r` in `[ceil(T / dt), K]`, so the link engine treats a semiflow as
//! a sampled map whose window starts at `ceil(T / dt)`.

use rayon::prelude::*;

use crate::builtins::{self, Kind, Rule, VectorField};
use crate::error::{Error, Result};
use crate::filtration::robustness_level;
use crate::link::{level_matrix, link_level_in, LevelMatrix, LinkWitness, MatrixOptions};
use crate::space::CostSpace;
use crate::system::{
    grid_coords, Dynamics, GridInfo, SampledTrajectories, StepWindow, TrajectoryStore,
};

/// Slack for treating `t / dt` as an integer.
const STEP_SLACK: f64 = 1e-9;

fn step_count(t: f64, dt: f64) -> usize {
    (t / dt + STEP_SLACK).floor() as usize
}

fn step_ceil(t: f64, dt: f64) -> usize {
    (t / dt - STEP_SLACK).ceil().max(0.0) as usize
}

fn rk4_step(field: &VectorField, x: &[f64], dt: f64, k: &mut [Vec<f64>; 4], tmp: &mut [f64], out: &mut [f64]) {
    field.eval(x, &mut k[0]);
    for i in 0..x.len() {
        tmp[i] = x[i] + 0.5 * dt * k[0][i];
    }
    field.eval(tmp, &mut k[1]);
    for i in 0..x.len() {
        tmp[i] = x[i] + 0.5 * dt * k[1][i];
    }
    field.eval(tmp, &mut k[2]);
    for i in 0..x.len() {
        tmp[i] = x[i] + dt * k[2][i];
    }
    field.eval(tmp, &mut k[3]);
    for i in 0..x.len() {
        out[i] = x[i] + dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
    }
}

fn integrate_into(field: &VectorField, z: &[f64], steps: usize, dt: f64, out: &mut Vec<f64>) -> Result<()> {
    let dim = z.len();
    let mut k = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
    let mut tmp = vec![0.0; dim];
    let mut cur = z.to_vec();
    let mut next = vec![0.0; dim];
    out.extend_from_slice(&cur);
    for s in 0..steps {
        rk4_step(field, &cur, dt, &mut k, &mut tmp, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteField {
                time: s as f64 * dt,
                state: cur,
            });
        }
        out.extend_from_slice(&next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(())
}

/// States at `0, dt, ..., floor(t_max / dt) dt` starting from `z`.
pub fn integrate(field: &VectorField, z: &[f64], t_max: f64, dt: f64) -> Result<Vec<Vec<f64>>> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidSystem(format!(
            "need dt > 0 and t_max >= 0, got dt = {dt}, t_max = {t_max}"
        )));
    }
    let mut flat = Vec::new();
    integrate_into(field, z, step_count(t_max, dt), dt, &mut flat)?;
    Ok(flat.chunks(z.len().max(1)).map(<[f64]>::to_vec).collect())
}

/// Semiflow of a vector field on an embedded sample set.
#[derive(Debug, Clone)]
pub struct SemiflowSystem {
    name: String,
    space: CostSpace,
    field: VectorField,
    dt: f64,
    t_min: f64,
    t_max: f64,
    grid: Option<GridInfo>,
    trajectories: TrajectoryStore,
}

impl SemiflowSystem {
    pub fn new(
        name: impl Into<String>,
        space: CostSpace,
        field: VectorField,
        dt: f64,
        t_min: f64,
        t_max: f64,
        grid: Option<GridInfo>,
    ) -> Result<Self> {
        if space.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        if !space.is_euclidean() {
            return Err(Error::InvalidSystem(
                "semiflows need a Euclidean embedded space".into(),
            ));
        }
        if !(dt > 0.0 && dt <= t_min && t_min <= t_max && t_max.is_finite()) {
            return Err(Error::InvalidSystem(format!(
                "need 0 < dt <= T <= t_max, got dt = {dt}, T = {t_min}, t_max = {t_max}"
            )));
        }
        let steps = step_count(t_max, dt);
        let coords = space.coords().unwrap();
        let dim = coords.dim();
        let chunks: Vec<Vec<f64>> = (0..space.len())
            .into_par_iter()
            .map(|z| {
                let mut out = Vec::with_capacity(dim * (steps + 1));
                integrate_into(&field, coords.point(z), steps, dt, &mut out).map(|_| out)
            })
            .collect::<Result<_>>()?;
        let data = chunks.concat();
        Ok(Self {
            name: name.into(),
            space,
            field,
            dt,
            t_min,
            t_max,
            grid,
            trajectories: TrajectoryStore::Sampled(SampledTrajectories::from_parts(dim, steps, data)),
        })
    }

    pub fn field(&self) -> VectorField {
        self.field
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Step window for links of duration at least `t`.
    pub fn window_for(&self, t: f64) -> Result<StepWindow> {
        if !(t >= self.t_min && t <= self.t_max + STEP_SLACK * self.dt) {
            return Err(Error::DurationOutOfRange {
                t,
                t_min: self.t_min,
                t_max: self.t_max,
            });
        }
        let last = step_count(self.t_max, self.dt);
        Ok(StepWindow::new(step_ceil(t, self.dt).min(last), last))
    }

    /// Duration of a witness in time units.
    pub fn witness_time(&self, witness: &LinkWitness) -> f64 {
        witness.steps as f64 * self.dt
    }
}

impl Dynamics for SemiflowSystem {
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
        self.window_for(self.t_min).expect("t_min lies in its own window")
    }

    fn grid(&self) -> Option<&GridInfo> {
        self.grid.as_ref()
    }
}

/// Uniform-grid sample of a builtin semiflow.
pub fn build_flow_grid_system(
    builtin_name: &str,
    bounds: &[(f64, f64)],
    spacing: f64,
    dt: f64,
    t_min: f64,
    t_max: f64,
    max_samples: usize,
) -> Result<SemiflowSystem> {
    let sys = builtins::builtin(builtin_name)?;
    let field = match (sys.kind, sys.rule) {
        (Kind::Semiflow, Rule::Field(field)) => field,
        _ => {
            return Err(Error::InvalidSystem(format!(
                "`{builtin_name}` is a map; use the map builder"
            )))
        }
    };
    let space = CostSpace::euclidean(grid_coords(bounds, spacing, max_samples)?);
    let grid = GridInfo {
        bounds: bounds.to_vec(),
        spacing,
    };
    SemiflowSystem::new(builtin_name, space, field, dt, t_min, t_max, Some(grid))
}

/// `(eps, T)`-link level from `x` to `y`: exit times range over the grid
/// times in `[T, t_max]`.
pub fn flow_link_level(sys: &SemiflowSystem, x: usize, y: usize, t: f64) -> Result<(f64, LinkWitness)> {
    link_level_in(sys, sys.window_for(t)?, x, y)
}

/// Level matrix for links of duration at least `t`.
pub fn flow_level_matrix(
    sys: &SemiflowSystem,
    t: f64,
    targets: Option<&[usize]>,
    spatial_index: bool,
) -> Result<LevelMatrix> {
    let options = MatrixOptions {
        window: Some(sys.window_for(t)?),
        spatial_index,
    };
    level_matrix(sys, targets, &options)
}

/// `L_T(x, x)` at the configured duration `T = t_min`, the largest duration
/// every link window shares.
pub fn flow_nw_level(sys: &SemiflowSystem, x: usize) -> Result<f64> {
    Ok(flow_link_level(sys, x, x, sys.t_min)?.0)
}

/// `beta(x)` over a flow level matrix, gated by the system tolerance.
pub fn flow_robustness_level(sys: &SemiflowSystem, matrix: &LevelMatrix, x: usize) -> Result<Option<f64>> {
    robustness_level(matrix, sys.default_tolerance(), x)
}
