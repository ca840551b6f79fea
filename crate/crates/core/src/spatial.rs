//! Uniform bucket grid for nearest-point queries.
//!
//! Results are exactly those of a linear scan minimising `(distance, id)`:
//! the search only stops once every unvisited bucket is strictly farther
//! than the best distance found.

use std::collections::HashMap;

use crate::space::euclidean;

const MAX_CELL: f64 = 1e9;

pub struct BucketIndex<'a> {
    dim: usize,
    cell: f64,
    origin: Vec<f64>,
    buckets: HashMap<Vec<i64>, Vec<(u32, &'a [f64])>>,
    /// Points too far out (or non-finite) to bucket; always scanned.
    overflow: Vec<(u32, &'a [f64])>,
    lo: Vec<i64>,
    hi: Vec<i64>,
    len: usize,
}

impl<'a> BucketIndex<'a> {
    /// `points` yields `(id, coordinates)`; ids must be increasing so that
    /// ties resolve to the first inserted point.
    pub fn new(
        dim: usize,
        cell: f64,
        origin: &[f64],
        points: impl IntoIterator<Item = (u32, &'a [f64])>,
    ) -> Self {
        assert!(cell > 0.0);
        let mut index = Self {
            dim,
            cell,
            origin: origin.to_vec(),
            buckets: HashMap::new(),
            overflow: Vec::new(),
            lo: vec![i64::MAX; dim],
            hi: vec![i64::MIN; dim],
            len: 0,
        };
        for (id, p) in points {
            index.len += 1;
            match index.cell_of(p) {
                Some(key) => {
                    for a in 0..dim {
                        index.lo[a] = index.lo[a].min(key[a]);
                        index.hi[a] = index.hi[a].max(key[a]);
                    }
                    index.buckets.entry(key).or_default().push((id, p));
                }
                None => index.overflow.push((id, p)),
            }
        }
        index
    }

    fn cell_of(&self, p: &[f64]) -> Option<Vec<i64>> {
        p.iter()
            .zip(&self.origin)
            .map(|(&v, &o)| {
                let c = ((v - o) / self.cell).floor();
                (c.is_finite() && c.abs() < MAX_CELL).then_some(c as i64)
            })
            .collect()
    }

    /// Nearest stored point to `q` as `(distance, id)`, ties to the smaller
    /// id. `None` when the index is empty.
    pub fn nearest(&self, q: &[f64]) -> Option<(f64, u32)> {
        let mut best: Option<(f64, u32)> = None;
        let consider = |best: &mut Option<(f64, u32)>, id: u32, p: &[f64]| {
            let d = euclidean(p, q);
            let better = match *best {
                None => true,
                Some((bd, bid)) => d.total_cmp(&bd).then(id.cmp(&bid)).is_lt(),
            };
            if better {
                *best = Some((d, id));
            }
        };
        for &(id, p) in &self.overflow {
            consider(&mut best, id, p);
        }
        if self.buckets.is_empty() {
            return best;
        }
        let Some(center) = self.cell_of(q) else {
            for bucket in self.buckets.values() {
                for &(id, p) in bucket {
                    consider(&mut best, id, p);
                }
            }
            return best;
        };
        // rings outside [first_ring, max_ring] hold no buckets
        let first_ring = (0..self.dim)
            .map(|a| (self.lo[a] - center[a]).max(center[a] - self.hi[a]).max(0))
            .max()
            .unwrap_or(0);
        let max_ring = (0..self.dim)
            .map(|a| (center[a] - self.lo[a]).abs().max((self.hi[a] - center[a]).abs()))
            .max()
            .unwrap_or(0);
        let mut walk = ShellWalk {
            ring: 0,
            lo: (0..self.dim).map(|a| self.lo[a] - center[a]).collect(),
            hi: (0..self.dim).map(|a| self.hi[a] - center[a]).collect(),
            offset: vec![0; self.dim],
            steps: 0,
            budget: 4 * self.len + 64,
        };
        for ring in first_ring..=max_ring {
            // unvisited points are more than (ring - 1) cells away
            if let Some((bd, _)) = best {
                if ring > 0 && bd < (ring - 1) as f64 * self.cell * (1.0 - 1e-9) {
                    break;
                }
            }
            walk.ring = ring;
            let complete = walk.visit(0, false, &mut |off| {
                let key: Vec<i64> = center.iter().zip(off).map(|(c, o)| c + o).collect();
                if let Some(bucket) = self.buckets.get(&key) {
                    for &(id, p) in bucket {
                        consider(&mut best, id, p);
                    }
                }
            });
            if !complete {
                // shells too large to walk; scanning everything is exact
                for bucket in self.buckets.values() {
                    for &(id, p) in bucket {
                        consider(&mut best, id, p);
                    }
                }
                return best;
            }
        }
        best
    }
}

/// Offsets with Chebyshev norm exactly `ring` inside the per-axis range
/// `[lo[a], hi[a]]`, abandoned after `budget` steps in total.
struct ShellWalk {
    ring: i64,
    lo: Vec<i64>,
    hi: Vec<i64>,
    offset: Vec<i64>,
    steps: usize,
    budget: usize,
}

impl ShellWalk {
    /// `false` when the budget ran out before the shell was covered.
    fn visit(&mut self, axis: usize, on_shell: bool, f: &mut impl FnMut(&[i64])) -> bool {
        let dim = self.offset.len();
        let ring = self.ring;
        if axis == 0 {
            self.steps += 1;
            if self.steps > self.budget {
                return false;
            }
        }
        if axis == dim {
            if on_shell || ring == 0 {
                f(&self.offset);
            }
            return true;
        }
        let (a, b) = (self.lo[axis].max(-ring), self.hi[axis].min(ring));
        if axis + 1 == dim && !on_shell && ring > 0 {
            for o in [-ring, ring] {
                if a <= o && o <= b {
                    self.offset[axis] = o;
                    f(&self.offset);
                }
            }
            return true;
        }
        for o in a..=b {
            self.steps += 1;
            if self.steps > self.budget {
                return false;
            }
            self.offset[axis] = o;
            if !self.visit(axis + 1, on_shell || o.abs() == ring, f) {
                return false;
            }
        }
        true
    }
}
