//! Brute-force evaluation of the link relations on small finite systems.
//!
//! Nothing here goes through the level matrix. Relations are evaluated
//! straight from their quantifier form on a finite set of budgets `E`: every
//! distinct cost entry, the quarter, half and three-quarter points of each
//! gap between consecutive entries, two values above the largest finite
//! entry, and `inf`. Every relation is constant on the open gaps, which
//! [`verify_lemmas`] checks by comparing the samples inside each gap.
//!
//! `R(x, y, e)`: some `z` and `1 <= n <= 2 |X|` have `c(x, z) <= e` and
//! `c(f^n(z), y) <= e`.
//! `R+(x, y, e)`: `R(x, y, e')` for every `e' > e`, read at every sampled
//! budget above `e` and at a sample in the open gap just above `e`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtration::{omega_membership, summarize};
use crate::level::{Branch, ExtendedLevel};
use crate::link::{level_matrix, MatrixOptions};
use crate::space::CostSpace;
use crate::system::MapSystem;

pub const MAX_FINITE_SIZE: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteInstance {
    size: usize,
    /// Row-major, `cost[x * size + y] = c(x, y)`.
    cost: Vec<f64>,
    map: Vec<usize>,
    seed: Option<u64>,
}

/// Families the random generator draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostFamily {
    /// Euclidean distances of lattice points in the plane (ties, possibly
    /// coincident points).
    Planar,
    /// Symmetric integer costs in `1..=4`.
    Symmetric,
    /// Arbitrary asymmetric costs in `{0, 1, 2, 3, 4, inf}`.
    Asymmetric,
    /// Asymmetric costs in `1..=4`.
    AsymmetricPositive,
}

impl FiniteInstance {
    pub fn new(cost: Vec<f64>, map: Vec<usize>, seed: Option<u64>) -> Result<Self> {
        let size = map.len();
        if size == 0 {
            return Err(Error::EmptySampleSet);
        }
        if size > MAX_FINITE_SIZE {
            return Err(Error::InvalidSystem(format!(
                "finite instances hold at most {MAX_FINITE_SIZE} points, got {size}"
            )));
        }
        // validates entries and the diagonal
        CostSpace::from_matrix(size, cost.clone(), None)?;
        if let Some(&bad) = map.iter().find(|&&t| t >= size) {
            return Err(Error::SampleOutOfRange { index: bad, len: size });
        }
        Ok(Self { size, cost, map, seed })
    }

    /// Deterministic instance with `size` drawn from `sizes`.
    pub fn random(seed: u64, sizes: std::ops::RangeInclusive<usize>) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size = rng.gen_range(sizes).clamp(1, MAX_FINITE_SIZE);
        let family = [
            CostFamily::Planar,
            CostFamily::Symmetric,
            CostFamily::Asymmetric,
            CostFamily::AsymmetricPositive,
        ][rng.gen_range(0..4)];
        let cost = random_costs(&mut rng, size, family);
        let map = if rng.gen_bool(0.3) {
            let mut p: Vec<usize> = (0..size).collect();
            p.shuffle(&mut rng);
            p
        } else {
            (0..size).map(|_| rng.gen_range(0..size)).collect()
        };
        Self {
            size,
            cost,
            map,
            seed: Some(seed),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn cost(&self, x: usize, y: usize) -> f64 {
        self.cost[x * self.size + y]
    }

    pub fn costs(&self) -> &[f64] {
        &self.cost
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn horizon(&self) -> usize {
        2 * self.size
    }

    pub fn is_permutation(&self) -> bool {
        let mut hit = vec![false; self.size];
        self.map.iter().all(|&i| !std::mem::replace(&mut hit[i], true))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.size).all(|x| (0..x).all(|y| self.cost(x, y) == self.cost(y, x)))
    }

    pub fn is_non_degenerate(&self) -> bool {
        (0..self.size).all(|x| (0..self.size).all(|y| x == y || self.cost(x, y) > 0.0))
    }

    /// Tabulated system with horizon `horizon`.
    pub fn system(&self, horizon: usize) -> Result<MapSystem> {
        let space = CostSpace::from_matrix(self.size, self.cost.clone(), None)?;
        MapSystem::tabulated("finite", space, self.map.clone(), horizon)
    }

    /// `{ f^n(x) : 1 <= n <= 2 |X| }`.
    pub fn forward_orbit(&self, x: usize) -> Vec<usize> {
        let mut seen = vec![false; self.size];
        let mut w = x;
        for _ in 0..self.horizon() {
            w = self.map[w];
            seen[w] = true;
        }
        (0..self.size).filter(|&i| seen[i]).collect()
    }
}

fn random_costs(rng: &mut ChaCha8Rng, n: usize, family: CostFamily) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    match family {
        CostFamily::Planar => {
            let pts: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.gen_range(0..5) as f64 * 0.5, rng.gen_range(0..5) as f64 * 0.5))
                .collect();
            for x in 0..n {
                for y in 0..n {
                    if x != y {
                        c[x * n + y] = (pts[x].0 - pts[y].0).hypot(pts[x].1 - pts[y].1);
                    }
                }
            }
        }
        CostFamily::Symmetric => {
            for x in 0..n {
                for y in 0..x {
                    let v = rng.gen_range(1..=4) as f64;
                    c[x * n + y] = v;
                    c[y * n + x] = v;
                }
            }
        }
        CostFamily::Asymmetric | CostFamily::AsymmetricPositive => {
            let lo = if family == CostFamily::Asymmetric { 0 } else { 1 };
            for x in 0..n {
                for y in 0..n {
                    if x != y {
                        c[x * n + y] = if family == CostFamily::Asymmetric && rng.gen_bool(0.1) {
                            f64::INFINITY
                        } else {
                            rng.gen_range(lo..=4) as f64
                        };
                    }
                }
            }
        }
    }
    c
}

/// Relation tables of one instance over the sampled budgets.
struct Oracle<'a> {
    inst: &'a FiniteInstance,
    /// Sampled budgets, ascending, last is `inf`.
    budgets: Vec<f64>,
    /// Distinct cost entries, ascending.
    critical: Vec<f64>,
    /// `r[i][x * n + y] = R(x, y, budgets[i])`.
    r: Vec<Vec<bool>>,
    /// `r_plus[i][x * n + y] = R+(x, y, budgets[i])`.
    r_plus: Vec<Vec<bool>>,
}

impl<'a> Oracle<'a> {
    fn new(inst: &'a FiniteInstance) -> Self {
        let n = inst.size;
        let mut critical: Vec<f64> = inst.cost.clone();
        critical.sort_by(f64::total_cmp);
        critical.dedup();
        let finite: Vec<f64> = critical.iter().copied().filter(|v| v.is_finite()).collect();
        let mut budgets = Vec::new();
        for (i, &v) in finite.iter().enumerate() {
            budgets.push(v);
            if let Some(&next) = finite.get(i + 1) {
                for q in [0.25, 0.5, 0.75] {
                    budgets.push(v + q * (next - v));
                }
            }
        }
        let top = finite.last().copied().unwrap_or(0.0);
        budgets.extend([top + 1.0, top + 2.0, f64::INFINITY]);

        // exits[z][k] = f^(k+1)(z)
        let exits: Vec<Vec<usize>> = (0..n)
            .map(|z| {
                let mut w = z;
                (0..inst.horizon())
                    .map(|_| {
                        w = inst.map[w];
                        w
                    })
                    .collect()
            })
            .collect();
        let r: Vec<Vec<bool>> = budgets
            .iter()
            .map(|&e| {
                let mut t = vec![false; n * n];
                for x in 0..n {
                    for z in (0..n).filter(|&z| inst.cost(x, z) <= e) {
                        for &w in &exits[z] {
                            for y in 0..n {
                                if inst.cost(w, y) <= e {
                                    t[x * n + y] = true;
                                }
                            }
                        }
                    }
                }
                t
            })
            .collect();
        let is_critical = |e: f64| critical.binary_search_by(|v| v.total_cmp(&e)).is_ok();
        // R+ at b[i]: every later sample, and the open gap just above b[i],
        // read at b[i] itself inside a gap or at the next sample above a
        // critical value
        let mut later = vec![true; n * n];
        let mut r_plus = vec![vec![true; n * n]; budgets.len()];
        for i in (0..budgets.len().saturating_sub(1)).rev() {
            for k in 0..n * n {
                later[k] = later[k] && r[i + 1][k];
            }
            let gap = if is_critical(budgets[i]) { i + 1 } else { i };
            for k in 0..n * n {
                r_plus[i][k] = later[k] && r[gap][k];
            }
        }
        Self {
            inst,
            budgets,
            critical,
            r,
            r_plus,
        }
    }

    fn n(&self) -> usize {
        self.inst.size
    }

    fn is_critical(&self, i: usize) -> bool {
        let e = self.budgets[i];
        self.critical.binary_search_by(|v| v.total_cmp(&e)).is_ok()
    }

    fn index_of(&self, e: f64) -> Option<usize> {
        self.budgets.iter().position(|&b| b == e)
    }

    fn reach(&self, i: usize, x: usize) -> Vec<usize> {
        let n = self.n();
        (0..n).filter(|&y| self.r[i][x * n + y]).collect()
    }

    fn pos_member(&self, i: usize, x: usize) -> bool {
        self.r_plus[i][x * self.n() + x]
    }

    fn neg_member(&self, i: usize, x: usize) -> bool {
        let n = self.n();
        let zero = self.index_of(0.0).expect("0 is a cost entry");
        if !self.pos_member(zero, x) {
            return false;
        }
        (0..=i).all(|j| (0..n).all(|z| !self.r[j][x * n + z] || self.r_plus[j][z * n + x]))
    }

    fn omega(&self, level: ExtendedLevel) -> Vec<usize> {
        let e = level.magnitude();
        let mut i = self
            .budgets
            .iter()
            .rposition(|&b| b <= e)
            .expect("budgets start at 0");
        // inside the gap above a critical value, read at the sample in that gap
        if self.budgets[i] < e && self.is_critical(i) {
            i += 1;
        }
        (0..self.n())
            .filter(|&x| match level.branch() {
                Branch::Pos => self.pos_member(i, x),
                Branch::Neg => self.neg_member(i, x),
            })
            .collect()
    }
}

/// `{ y : some z, 1 <= n <= 2|X| with max(c(x, z), c(f^n(z), y)) <= eps }`.
pub fn definitional_reachable(inst: &FiniteInstance, x: usize, eps: f64) -> Vec<usize> {
    let n = inst.size;
    let mut out = vec![false; n];
    for z in (0..n).filter(|&z| inst.cost(x, z) <= eps) {
        let mut w = z;
        for _ in 0..inst.horizon() {
            w = inst.map[w];
            for (y, hit) in out.iter_mut().enumerate() {
                if inst.cost(w, y) <= eps {
                    *hit = true;
                }
            }
        }
    }
    (0..n).filter(|&y| out[y]).collect()
}

/// The slice at `level` from the quantifier definitions.
pub fn definitional_omega(inst: &FiniteInstance, level: ExtendedLevel) -> Vec<usize> {
    Oracle::new(inst).omega(level)
}

/// Deliberate defects for exercising the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Positive membership read as `lambda(x) < eps`.
    LambdaStrict,
    /// Negative membership read as `eps <= beta(x)`.
    BetaClosed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckStatus {
    Passed,
    Skipped(String),
    Violated(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub seed: Option<u64>,
    pub checks: Vec<CheckOutcome>,
}

impl LemmaReport {
    pub fn violations(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks
            .iter()
            .filter(|c| matches!(c.status, CheckStatus::Violated(_)))
    }

    pub fn is_clean(&self) -> bool {
        self.violations().next().is_none()
    }
}

struct Recorder {
    checks: Vec<CheckOutcome>,
}

impl Recorder {
    fn gate(&mut self, name: &'static str, hypothesis: Option<&str>, check: impl FnOnce() -> Option<String>) {
        let status = match hypothesis {
            Some(reason) => CheckStatus::Skipped(reason.to_string()),
            None => match check() {
                None => CheckStatus::Passed,
                Some(w) => CheckStatus::Violated(w),
            },
        };
        self.checks.push(CheckOutcome { name, status });
    }

    fn run(&mut self, name: &'static str, check: impl FnOnce() -> Option<String>) {
        self.gate(name, None, check)
    }
}

fn not_subset(a: &[usize], b: &[usize]) -> Option<usize> {
    a.iter().copied().find(|v| !b.contains(v))
}

/// Runs the lemma suite on one instance. Each check reports the first
/// violation it finds.
pub fn verify_lemmas(inst: &FiniteInstance, fault: Option<Fault>) -> Result<LemmaReport> {
    let o = Oracle::new(inst);
    let n = inst.size;
    let b = &o.budgets;
    let last = b.len() - 1;
    let mut rec = Recorder { checks: Vec::new() };
    let non_degenerate = inst.is_non_degenerate();
    let permutation = inst.is_permutation();
    let symmetric = inst.is_symmetric();

    rec.run("piecewise-constancy", || {
        // consecutive non-critical samples share a gap
        for i in 0..last - 1 {
            if !o.is_critical(i) && !o.is_critical(i + 1) && b[i + 1].is_finite() {
                if o.r[i] != o.r[i + 1] || o.r_plus[i] != o.r_plus[i + 1] {
                    return Some(format!("relations differ at {} and {}", b[i], b[i + 1]));
                }
            }
        }
        None
    });

    rec.run("reachable-monotonicity", || {
        for i in 0..last {
            for x in 0..n {
                let (lo, hi) = (o.reach(i, x), o.reach(i + 1, x));
                if let Some(y) = not_subset(&lo, &hi) {
                    return Some(format!("x={x} y={y} in [x]_{} but not [x]_{}", b[i], b[i + 1]));
                }
            }
        }
        None
    });

    rec.run("plus-within-larger", || {
        for i in 0..last {
            for j in i + 1..b.len() {
                for k in 0..n * n {
                    if o.r_plus[i][k] && !o.r[j][k] {
                        return Some(format!("x={} y={} at {} vs {}", k / n, k % n, b[i], b[j]));
                    }
                }
            }
        }
        None
    });

    rec.run("plus-intersection", || {
        // the intersection over all larger budgets is R just above e
        for i in 0..last {
            let above = if o.is_critical(i) { i + 1 } else { i };
            for k in 0..n * n {
                if o.r_plus[i][k] != o.r[above][k] {
                    return Some(format!("x={} y={} at {}", k / n, k % n, b[i]));
                }
            }
        }
        None
    });

    let zero = o.index_of(0.0).expect("diagonal");
    rec.gate(
        "cost-orbit",
        (!non_degenerate).then_some("cost is degenerate"),
        || {
            for x in 0..n {
                let orbit = inst.forward_orbit(x);
                let reach = o.reach(zero, x);
                if reach != orbit {
                    return Some(format!("x={x}: [x]_0 = {reach:?}, orbit = {orbit:?}"));
                }
            }
            None
        },
    );

    rec.run("filtration", || {
        for i in 0..last {
            for x in 0..n {
                if o.pos_member(i, x) && !o.pos_member(i + 1, x) {
                    return Some(format!("x={x} leaves Omega between {} and {}", b[i], b[i + 1]));
                }
                if o.neg_member(i, x) && !o.pos_member(zero, x) {
                    return Some(format!("x={x} in Omega_-{} but not Omega_0", b[i]));
                }
            }
        }
        for x in 0..n {
            if !o.pos_member(last, x) {
                return Some(format!("x={x} not in Omega_inf"));
            }
            let c = inst.cost(inst.map[x], x);
            let i = o.index_of(c).expect("cost entries are sampled");
            if !o.pos_member(i, x) {
                return Some(format!("x={x} not in Omega at c(f(x), x) = {c}"));
            }
        }
        None
    });

    rec.run("negative-monotonicity", || {
        for i in 0..last - 1 {
            for x in 0..n {
                if o.neg_member(i + 1, x) && !o.neg_member(i, x) {
                    return Some(format!("x={x} in Omega_-{} but not Omega_-{}", b[i + 1], b[i]));
                }
            }
        }
        None
    });

    rec.gate(
        "permutation-persistence",
        if !permutation {
            Some("map is not a bijection")
        } else if !symmetric {
            Some("cost is asymmetric")
        } else {
            None
        },
        || {
            for i in 0..last {
                for x in 0..n {
                    if !o.neg_member(i, x) {
                        return Some(format!("x={x} not in Omega_-{}", b[i]));
                    }
                }
            }
            None
        },
    );

    rec.gate(
        "periodic-zero-level",
        (!permutation).then_some("map is not a bijection"),
        || {
            for x in (0..n).filter(|&x| o.pos_member(zero, x)) {
                if !inst.forward_orbit(x).contains(&x) {
                    return Some(format!("x={x} in Omega_0 but not periodic"));
                }
            }
            None
        },
    );

    rec.gate(
        "zero-level-agreement",
        if !permutation {
            Some("map is not a bijection")
        } else if !non_degenerate {
            Some("cost is degenerate")
        } else {
            None
        },
        || {
            for x in 0..n {
                if o.neg_member(zero, x) != o.pos_member(zero, x) {
                    return Some(format!("x={x}: -0 and +0 membership differ"));
                }
            }
            None
        },
    );

    rec.gate(
        "minus-zero-shadow",
        (!non_degenerate).then_some("cost is degenerate"),
        || {
            for x in 0..n {
                let orbit = inst.forward_orbit(x);
                let expected = orbit.contains(&x)
                    && orbit.iter().all(|&z| o.r_plus[zero][z * n + x]);
                if o.neg_member(zero, x) != expected {
                    return Some(format!("x={x}: Omega_-0 membership {}", !expected));
                }
            }
            None
        },
    );

    let full = level_matrix(&inst.system(inst.horizon())?, None, &MatrixOptions::default())?;
    let doubled = level_matrix(&inst.system(2 * inst.horizon())?, None, &MatrixOptions::default())?;
    rec.run("horizon-doubling", || {
        for x in 0..n {
            for y in 0..n {
                if full.level(x, y) != doubled.level(x, y) {
                    return Some(format!("x={x} y={y}: {} vs {}", full.level(x, y), doubled.level(x, y)));
                }
            }
        }
        None
    });

    let summary = summarize(&full, 0.0)?;
    rec.run("reduction-equivalence", || {
        for (i, &e) in b.iter().enumerate() {
            for branch in [Branch::Pos, Branch::Neg] {
                if branch == Branch::Neg && e.is_infinite() {
                    continue;
                }
                let level = ExtendedLevel::new(branch, e).expect("valid level");
                for x in 0..n {
                    let oracle = match branch {
                        Branch::Pos => o.pos_member(i, x),
                        Branch::Neg => o.neg_member(i, x),
                    };
                    let lambda = summary.lambda(x).expect("covered");
                    let beta = summary.beta(x).expect("covered");
                    let engine = match (fault, branch) {
                        (Some(Fault::LambdaStrict), Branch::Pos) => lambda < e,
                        (Some(Fault::BetaClosed), Branch::Neg) => beta.is_some_and(|bv| e <= bv),
                        _ => omega_membership(&summary, x, level).expect("covered"),
                    };
                    if oracle != engine {
                        return Some(format!(
                            "x={x} at {level}: definition says {oracle}, lambda={lambda} beta={beta:?} says {engine}"
                        ));
                    }
                }
            }
        }
        None
    });

    Ok(LemmaReport {
        seed: inst.seed,
        checks: rec.checks,
    })
}
