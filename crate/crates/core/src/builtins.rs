//! Registry of the reference systems on the real line (and the truncated
//! two-dimensional counterexample), with their closed-form level functions.

use crate::error::{Error, Result};
use crate::space::{Coords, CostSpace};
use crate::system::MapSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Map,
    Semiflow,
}

/// Piecewise-linear maps `x -> a x` (x <= 0) / `b x` (x > 0), applied
/// componentwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapRule {
    pub neg_slope: f64,
    pub pos_slope: f64,
}

impl MapRule {
    pub const fn linear(slope: f64) -> Self {
        Self {
            neg_slope: slope,
            pos_slope: slope,
        }
    }

    pub const IDENTITY: MapRule = MapRule::linear(1.0);

    #[inline]
    pub fn eval_scalar(&self, x: f64) -> f64 {
        if x <= 0.0 {
            self.neg_slope * x
        } else {
            self.pos_slope * x
        }
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = self.eval_scalar(v);
        }
    }
}

/// Autonomous vector fields `x' = F(x)`, applied componentwise:
/// `F(x) = a x` (x <= 0) / `b x` (x > 0), plus a constant drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorField {
    pub neg_slope: f64,
    pub pos_slope: f64,
    pub drift: f64,
}

impl VectorField {
    pub const fn linear(slope: f64) -> Self {
        Self {
            neg_slope: slope,
            pos_slope: slope,
            drift: 0.0,
        }
    }

    pub const fn constant(drift: f64) -> Self {
        Self {
            neg_slope: 0.0,
            pos_slope: 0.0,
            drift,
        }
    }

    #[inline]
    pub fn eval_scalar(&self, x: f64) -> f64 {
        let slope = if x <= 0.0 {
            self.neg_slope
        } else {
            self.pos_slope
        };
        slope * x + self.drift
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = self.eval_scalar(v);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    Map(MapRule),
    Field(VectorField),
    /// The tabulated system on `A ⊔ B`, see [`counterexample_s8`].
    Counterexample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltinSystem {
    pub name: &'static str,
    pub kind: Kind,
    pub rule: Rule,
    /// Default analysis box on the real line.
    pub default_box: (f64, f64),
    /// Default `(T, t_max)` for semiflows.
    pub default_durations: Option<(f64, f64)>,
    pub description: &'static str,
}

impl BuiltinSystem {
    /// Image of a point under the map, or the field value for a semiflow.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        match self.rule {
            Rule::Map(m) => m.eval(x, &mut out),
            Rule::Field(v) => v.eval(x, &mut out),
            Rule::Counterexample => {
                return Err(Error::InvalidSystem(
                    "counterexample_s8 is tabulated; build it with counterexample_s8()".into(),
                ))
            }
        }
        Ok(out)
    }

    pub fn has_analytic_form(&self) -> bool {
        analytic_lambda_fn(self.name).is_some()
    }
}

pub const BUILTIN_NAMES: [&str; 11] = [
    "f2",
    "f_half",
    "f_rep",
    "f_att",
    "counterexample_s8",
    "flow_Z",
    "flow_Y",
    "flow_rep",
    "flow_att",
    "identity",
    "translation_flow",
];

const MAP_BOX: (f64, f64) = (-5.0, 5.0);
const FLOW_BOX: (f64, f64) = (-3.0, 3.0);

pub fn builtin(name: &str) -> Result<BuiltinSystem> {
    let map = |rule, description| BuiltinSystem {
        name: static_name(name),
        kind: Kind::Map,
        rule: Rule::Map(rule),
        default_box: MAP_BOX,
        default_durations: None,
        description,
    };
    let flow = |field, durations, description| BuiltinSystem {
        name: static_name(name),
        kind: Kind::Semiflow,
        rule: Rule::Field(field),
        default_box: FLOW_BOX,
        default_durations: Some(durations),
        description,
    };
    let sys = match name {
        "f2" => map(MapRule::linear(2.0), "expanding map x -> 2x"),
        "f_half" => map(MapRule::linear(0.5), "contraction x -> x/2"),
        "f_rep" => map(
            MapRule {
                neg_slope: 1.0,
                pos_slope: 2.0,
            },
            "x (x <= 0), 2x (x > 0)",
        ),
        "f_att" => map(
            MapRule {
                neg_slope: 1.0,
                pos_slope: 0.5,
            },
            "x (x <= 0), x/2 (x > 0)",
        ),
        "identity" => map(MapRule::IDENTITY, "identity map"),
        "counterexample_s8" => BuiltinSystem {
            name: "counterexample_s8",
            kind: Kind::Map,
            rule: Rule::Counterexample,
            default_box: (0.0, 1.0),
            default_durations: None,
            description: "truncated map on A = {(1/n,0)} and B = {(1/n,1/m)}",
        },
        "flow_Z" => flow(VectorField::linear(-1.0), (10.0, 20.0), "x' = -x"),
        "flow_Y" => flow(VectorField::linear(1.0), (10.0, 20.0), "x' = x"),
        "flow_rep" => flow(
            VectorField {
                neg_slope: 0.0,
                pos_slope: 1.0,
                drift: 0.0,
            },
            (1.0, 10.0),
            "x' = 0 (x <= 0), x (x > 0)",
        ),
        "flow_att" => flow(
            VectorField {
                neg_slope: 0.0,
                pos_slope: -1.0,
                drift: 0.0,
            },
            (1.0, 10.0),
            "x' = 0 (x <= 0), -x (x > 0)",
        ),
        "translation_flow" => flow(VectorField::constant(1.0), (1.0, 10.0), "x' = 1"),
        _ => return Err(Error::UnknownBuiltin(name.to_string())),
    };
    Ok(sys)
}

fn static_name(name: &str) -> &'static str {
    BUILTIN_NAMES
        .iter()
        .find(|n| **n == name)
        .copied()
        .unwrap_or("unknown")
}

type ScalarFn = fn(f64) -> f64;
type BetaFn = fn(f64) -> Option<f64>;

fn analytic_lambda_fn(name: &str) -> Option<ScalarFn> {
    Some(match name {
        "f2" | "f_half" => |x: f64| x.abs() / 3.0,
        "f_rep" | "f_att" => |x: f64| x.max(0.0) / 3.0,
        "flow_Z" | "flow_Y" => |x: f64| x.abs(),
        "flow_rep" | "flow_att" => |x: f64| x.max(0.0),
        "identity" => |_| 0.0,
        _ => return None,
    })
}

fn analytic_beta_fn(name: &str) -> Option<BetaFn> {
    Some(match name {
        "f2" | "flow_Y" => |x: f64| (x == 0.0).then_some(0.0),
        "f_half" | "flow_Z" => |x: f64| (x == 0.0).then_some(f64::INFINITY),
        "f_rep" | "flow_rep" => |x: f64| (x <= 0.0).then_some(-x),
        "f_att" | "flow_att" => |x: f64| (x <= 0.0).then_some(f64::INFINITY),
        "identity" => |_| Some(f64::INFINITY),
        _ => return None,
    })
}

/// Closed-form non-wandering level `lambda(x)` of a one-dimensional builtin.
///
/// For semiflows this is the limit of long link durations; at a finite
/// duration `T` the level of the linear flows is `|x| tanh(T/2)`.
pub fn analytic_level(name: &str, x: f64) -> Result<f64> {
    analytic_lambda_fn(name)
        .map(|f| f(x))
        .ok_or_else(|| Error::NoAnalyticForm(name.to_string()))
}

/// Closed-form robustness level `beta(x)`; `Ok(None)` where it is undefined
/// because `x` is not non-wandering.
pub fn analytic_beta(name: &str, x: f64) -> Result<Option<f64>> {
    analytic_beta_fn(name)
        .map(|f| f(x))
        .ok_or_else(|| Error::NoAnalyticForm(name.to_string()))
}

/// Points of the truncated counterexample, in the order
/// `A = (1/n, 0)` for `n = 1..=n_max`, then `B = (1/n, 1/m)` for
/// `n = 2..=n_max`, `m = 1..=m_max`.
pub struct CounterexampleLayout {
    pub n_max: usize,
    pub m_max: usize,
}

impl CounterexampleLayout {
    pub fn len(&self) -> usize {
        self.n_max + (self.n_max - 1) * self.m_max
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of `(1/n, 0)`.
    pub fn a(&self, n: usize) -> usize {
        n - 1
    }

    /// Index of `(1/n, 1/m)`, `n >= 2`.
    pub fn b(&self, n: usize, m: usize) -> usize {
        self.n_max + (n - 2) * self.m_max + (m - 1)
    }

    /// The point `p = (1, 0)`.
    pub fn p(&self) -> usize {
        0
    }
}

/// Truncation of the map on `A ⊔ B`:
/// `(1/n, 0) -> (1/(n+1), 0)`, `(x, 1) -> (1, 0)`,
/// `(1/n, 1/m) -> (1/(n+1), 1/(m-1))`. At the truncation boundary the last
/// `A` point is fixed and `B` points with `n = n_max` advance only in `m`.
/// The horizon is `2 |X|`.
pub fn counterexample_s8(n_max: usize, m_max: usize) -> Result<MapSystem> {
    if n_max < 2 || m_max < 1 {
        return Err(Error::InvalidSystem(
            "counterexample_s8 needs n_max >= 2 and m_max >= 1".into(),
        ));
    }
    let layout = CounterexampleLayout { n_max, m_max };
    let len = layout.len();
    let mut points = Vec::with_capacity(len * 2);
    let mut table = vec![0usize; len];
    for n in 1..=n_max {
        points.extend([1.0 / n as f64, 0.0]);
        table[layout.a(n)] = layout.a((n + 1).min(n_max));
    }
    for n in 2..=n_max {
        for m in 1..=m_max {
            points.extend([1.0 / n as f64, 1.0 / m as f64]);
            table[layout.b(n, m)] = if m == 1 {
                layout.p()
            } else {
                layout.b((n + 1).min(n_max), m - 1)
            };
        }
    }
    let space = CostSpace::euclidean(Coords::new(2, points)?);
    MapSystem::tabulated("counterexample_s8", space, table, 2 * len)
}
