//! JSON system files and the analysis pipeline behind the command line.
//!
//! ```json
//! {
//!   "kind": "map",
//!   "source": {"builtin": "f2"},
//!   "grid": {"box": [[-5, 5]], "h": 0.01},
//!   "horizon": {"n_max": 64},
//!   "tolerance": {"tau": "auto"}
//! }
//! ```
//!
//! `source` holds exactly one of `builtin` (with optional `params`) or
//! `table` (`points`, `cost` = `"euclidean"` or a matrix with `"inf"`
//! entries allowed, `map`). Builtin maps and semiflows need a `grid`;
//! tables and `counterexample_s8` must not have one.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::builtins::{self, counterexample_s8, Kind, Rule};
use crate::error::{Error, Result};
use crate::export::{Real, SystemMeta};
use crate::filtration::{summarize, LevelSummary};
use crate::flow::{build_flow_grid_system, SemiflowSystem};
use crate::link::{horizon_stability, level_matrix, HorizonStability, LevelMatrix, MatrixOptions};
use crate::space::{Coords, CostSpace};
use crate::system::{build_grid_system, Dynamics, MapSystem, TrajectoryStore};

pub const DEFAULT_N_MAX: usize = 64;
pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_COUNTEREXAMPLE_SIZE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    Map,
    Semiflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpecFile {
    pub kind: SpecKind,
    pub source: SourceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<HorizonSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<ToleranceSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<BTreeMap<String, serde_json::Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    pub cost: CostSpec,
    pub map: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CostSpec {
    /// Only `"euclidean"` is accepted.
    Named(String),
    Matrix(Vec<Vec<Real>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub tau: Tau,
}

/// `Omega_0` gate: `"auto"` or a non-negative number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tau {
    Auto,
    Value(f64),
}

impl Serialize for Tau {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Tau::Auto => s.serialize_str("auto"),
            Tau::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Tau {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Tau;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a non-negative number or \"auto\"")
            }
            fn visit_f64<E>(self, v: f64) -> std::result::Result<Tau, E> {
                Ok(Tau::Value(v))
            }
            fn visit_i64<E>(self, v: i64) -> std::result::Result<Tau, E> {
                Ok(Tau::Value(v as f64))
            }
            fn visit_u64<E>(self, v: u64) -> std::result::Result<Tau, E> {
                Ok(Tau::Value(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<Tau, E> {
                match v {
                    "auto" => Ok(Tau::Auto),
                    _ => Err(E::custom(format!("tau must be a number or \"auto\", got \"{v}\""))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

fn spec_err(msg: impl Into<String>) -> Error {
    Error::Spec(msg.into())
}

impl SystemSpecFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Spec with default grid and durations for a builtin.
    pub fn for_builtin(name: &str) -> Result<Self> {
        let b = builtins::builtin(name)?;
        let grid = (b.rule != Rule::Counterexample).then(|| GridSpec {
            bounds: vec![[b.default_box.0, b.default_box.1]],
            h: 0.01,
        });
        let horizon = match (b.kind, b.default_durations) {
            (Kind::Semiflow, Some((t, t_max))) => HorizonSpec {
                n_max: None,
                dt: Some(DEFAULT_DT),
                t_min: Some(t),
                t_max: Some(t_max),
            },
            _ if b.rule == Rule::Counterexample => HorizonSpec::default(),
            _ => HorizonSpec {
                n_max: Some(DEFAULT_N_MAX),
                ..HorizonSpec::default()
            },
        };
        Ok(Self {
            kind: match b.kind {
                Kind::Map => SpecKind::Map,
                Kind::Semiflow => SpecKind::Semiflow,
            },
            source: SourceSpec {
                builtin: Some(name.to_string()),
                ..SourceSpec::default()
            },
            grid,
            horizon: Some(horizon),
            tolerance: Some(ToleranceSpec { tau: Tau::Auto }),
        })
    }

    /// Builds the system; grids above `max_samples` points are rejected.
    pub fn load(&self, max_samples: usize) -> Result<LoadedSystem> {
        let (system, meta_kind) = match (&self.source.builtin, &self.source.table) {
            (Some(_), Some(_)) => return Err(spec_err("source has both `builtin` and `table`")),
            (None, None) => return Err(spec_err("source needs `builtin` or `table`")),
            (Some(name), None) => (self.load_builtin(name, max_samples)?, None),
            (None, Some(table)) => {
                if self.source.params.is_some() {
                    return Err(spec_err("`params` only applies to builtins"));
                }
                (self.load_table(table)?, Some("table"))
            }
        };
        let auto = system.dynamics().default_tolerance();
        let tau = match self.tolerance.as_ref().map(|t| t.tau) {
            None | Some(Tau::Auto) => auto,
            Some(Tau::Value(v)) if v >= 0.0 && v.is_finite() => v,
            Some(Tau::Value(v)) => return Err(spec_err(format!("tau must be finite and >= 0, got {v}"))),
        };
        let mut meta = SystemMeta {
            name: system.dynamics().name().to_string(),
            kind: meta_kind
                .unwrap_or(match self.kind {
                    SpecKind::Map => "map",
                    SpecKind::Semiflow => "semiflow",
                })
                .to_string(),
            bounds: system
                .dynamics()
                .grid()
                .map(|g| g.bounds.iter().map(|&(a, b)| [a, b]).collect()),
            h: system.dynamics().grid_spacing(),
            n_max: None,
            dt: None,
            t_min: None,
            t_max: None,
            tau,
            horizon_stable: None,
        };
        match &system {
            SystemKind::Map(m) => meta.n_max = Some(m.horizon()),
            SystemKind::Flow(f) => {
                meta.dt = Some(f.dt());
                meta.t_min = Some(f.t_min());
                meta.t_max = Some(f.t_max());
            }
        }
        Ok(LoadedSystem { system, tau, meta })
    }

    fn horizon(&self) -> HorizonSpec {
        self.horizon.clone().unwrap_or_default()
    }

    fn expect_map_horizon(&self) -> Result<Option<usize>> {
        let h = self.horizon();
        if h.dt.is_some() || h.t_min.is_some() || h.t_max.is_some() {
            return Err(spec_err("maps take `horizon.n_max`, not dt/t_min/t_max"));
        }
        match h.n_max {
            Some(0) => Err(spec_err("horizon.n_max must be at least 1")),
            n => Ok(n),
        }
    }

    fn load_builtin(&self, name: &str, max_samples: usize) -> Result<SystemKind> {
        let b = builtins::builtin(name)?;
        let want = match b.kind {
            Kind::Map => SpecKind::Map,
            Kind::Semiflow => SpecKind::Semiflow,
        };
        if want != self.kind {
            let word = |k: SpecKind| match k {
                SpecKind::Map => "map",
                SpecKind::Semiflow => "semiflow",
            };
            return Err(spec_err(format!(
                "builtin `{name}` is a {}, but kind is \"{}\"",
                word(want),
                word(self.kind)
            )));
        }
        let params = self.source.params.clone().unwrap_or_default();
        if b.rule == Rule::Counterexample {
            if self.grid.is_some() {
                return Err(spec_err("counterexample_s8 is tabulated and takes no grid"));
            }
            let get = |k: &str| -> Result<usize> {
                match params.get(k) {
                    None => Ok(DEFAULT_COUNTEREXAMPLE_SIZE),
                    Some(v) => v
                        .as_u64()
                        .map(|n| n as usize)
                        .ok_or_else(|| spec_err(format!("params.{k} must be a non-negative integer"))),
                }
            };
            if let Some(k) = params.keys().find(|k| *k != "n_max" && *k != "m_max") {
                return Err(spec_err(format!("unknown parameter `{k}` for counterexample_s8")));
            }
            let sys = counterexample_s8(get("n_max")?, get("m_max")?)?;
            let sys = match self.expect_map_horizon()? {
                Some(n) => sys.with_horizon(n)?,
                None => sys,
            };
            return Ok(SystemKind::Map(sys));
        }
        if let Some(k) = params.keys().next() {
            return Err(spec_err(format!("builtin `{name}` takes no parameters (got `{k}`)")));
        }
        let grid = self
            .grid
            .as_ref()
            .ok_or_else(|| spec_err(format!("builtin `{name}` needs a `grid`")))?;
        let bounds: Vec<(f64, f64)> = grid.bounds.iter().map(|&[a, b]| (a, b)).collect();
        match b.kind {
            Kind::Map => {
                let n = self.expect_map_horizon()?.unwrap_or(DEFAULT_N_MAX);
                Ok(SystemKind::Map(build_grid_system(name, &bounds, grid.h, n, max_samples)?))
            }
            Kind::Semiflow => {
                let h = self.horizon();
                if h.n_max.is_some() {
                    return Err(spec_err("semiflows take dt/t_min/t_max, not n_max"));
                }
                let (t, t_max) = b.default_durations.expect("semiflow durations");
                Ok(SystemKind::Flow(build_flow_grid_system(
                    name,
                    &bounds,
                    grid.h,
                    h.dt.unwrap_or(DEFAULT_DT),
                    h.t_min.unwrap_or(t),
                    h.t_max.unwrap_or(t_max),
                    max_samples,
                )?))
            }
        }
    }

    fn load_table(&self, table: &TableSpec) -> Result<SystemKind> {
        if self.kind != SpecKind::Map {
            return Err(spec_err("tables describe maps; use kind \"map\""));
        }
        if self.grid.is_some() {
            return Err(spec_err("tables take no `grid`"));
        }
        let n = table.map.len();
        if n == 0 {
            return Err(Error::EmptySampleSet);
        }
        let coords = match &table.points {
            Some(p) if p.len() != n => {
                return Err(spec_err(format!("table has {} points but {n} map entries", p.len())))
            }
            Some(p) => Some(Coords::from_points(p)?),
            None => None,
        };
        let space = match &table.cost {
            CostSpec::Named(s) if s == "euclidean" => CostSpace::euclidean(
                coords.ok_or_else(|| spec_err("euclidean cost needs `points`"))?,
            ),
            CostSpec::Named(s) => return Err(spec_err(format!("unknown cost `{s}`"))),
            CostSpec::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(spec_err(format!("cost matrix must be {n} x {n}")));
                }
                let flat = rows.iter().flatten().map(|r| r.0).collect();
                CostSpace::from_matrix(n, flat, coords)?
            }
        };
        let horizon = self.expect_map_horizon()?.unwrap_or(2 * n);
        Ok(SystemKind::Map(MapSystem::tabulated("table", space, table.map.clone(), horizon)?))
    }
}

#[derive(Debug, Clone)]
pub enum SystemKind {
    Map(MapSystem),
    Flow(SemiflowSystem),
}

impl SystemKind {
    pub fn dynamics(&self) -> &dyn Dynamics {
        match self {
            SystemKind::Map(m) => m,
            SystemKind::Flow(f) => f,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedSystem {
    pub system: SystemKind,
    pub tau: f64,
    pub meta: SystemMeta,
}

pub struct Analysis {
    pub matrix: LevelMatrix,
    pub summary: LevelSummary,
    pub stability: Option<HorizonStability>,
}

impl LoadedSystem {
    pub fn dynamics(&self) -> &dyn Dynamics {
        self.system.dynamics()
    }

    fn options(&self) -> MatrixOptions {
        MatrixOptions {
            window: None,
            spatial_index: matches!(self.dynamics().trajectories(), TrajectoryStore::Sampled(_)),
        }
    }

    /// Full level matrix, summary and (optionally) the horizon check.
    pub fn analyze(&self, check_horizon: bool) -> Result<Analysis> {
        let options = self.options();
        let matrix = level_matrix(self.dynamics(), None, &options)?;
        let summary = summarize(&matrix, self.tau)?;
        let stability = if check_horizon {
            Some(horizon_stability(self.dynamics(), &matrix, &options)?)
        } else {
            None
        };
        Ok(Analysis {
            matrix,
            summary,
            stability,
        })
    }

    /// Metadata with the horizon check recorded.
    pub fn meta_with(&self, analysis: &Analysis) -> SystemMeta {
        let mut meta = self.meta.clone();
        meta.horizon_stable = analysis.stability.as_ref().map(HorizonStability::is_stable);
        meta
    }
}
