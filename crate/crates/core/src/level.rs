//! The extended filtration index `(-inf, -0] ⊔ [+0, inf]`.
//!
//! Negative levels are stored as a magnitude on the [`Branch::Neg`] branch, so
//! `-0` and `+0` are distinct values with `-0 < +0`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Neg,
    Pos,
}

/// A point of the extended index. The magnitude is never NaN, and only the
/// positive branch may carry `+inf`.
#[derive(Debug, Clone, Copy)]
pub struct ExtendedLevel {
    branch: Branch,
    magnitude: f64,
}

impl ExtendedLevel {
    pub const NEG_ZERO: ExtendedLevel = ExtendedLevel {
        branch: Branch::Neg,
        magnitude: 0.0,
    };
    pub const POS_ZERO: ExtendedLevel = ExtendedLevel {
        branch: Branch::Pos,
        magnitude: 0.0,
    };
    pub const INFINITY: ExtendedLevel = ExtendedLevel {
        branch: Branch::Pos,
        magnitude: f64::INFINITY,
    };

    pub fn new(branch: Branch, magnitude: f64) -> Result<Self, Error> {
        let ok = match branch {
            Branch::Neg => magnitude.is_finite() && magnitude >= 0.0,
            Branch::Pos => !magnitude.is_nan() && magnitude >= 0.0,
        };
        if !ok {
            return Err(Error::InvalidLevel(format!("{branch:?} {magnitude}")));
        }
        // normalise -0.0 so that hashing and formatting stay canonical
        Ok(Self {
            branch,
            magnitude: magnitude + 0.0,
        })
    }

    /// `-magnitude`. Panics on a negative, NaN or infinite magnitude.
    pub fn neg(magnitude: f64) -> Self {
        Self::new(Branch::Neg, magnitude).expect("invalid negative level")
    }

    /// `+magnitude`. Panics on a negative or NaN magnitude.
    pub fn pos(magnitude: f64) -> Self {
        Self::new(Branch::Pos, magnitude).expect("invalid positive level")
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn is_negative(&self) -> bool {
        self.branch == Branch::Neg
    }

    /// Position on the real line, with both zeros mapped to `0.0`.
    pub fn signed_value(&self) -> f64 {
        match self.branch {
            Branch::Neg => -self.magnitude,
            Branch::Pos => self.magnitude,
        }
    }
}

/// Total order of the extended index.
pub fn compare_levels(a: &ExtendedLevel, b: &ExtendedLevel) -> Ordering {
    match (a.branch, b.branch) {
        (Branch::Neg, Branch::Pos) => Ordering::Less,
        (Branch::Pos, Branch::Neg) => Ordering::Greater,
        (Branch::Neg, Branch::Neg) => b.magnitude.total_cmp(&a.magnitude),
        (Branch::Pos, Branch::Pos) => a.magnitude.total_cmp(&b.magnitude),
    }
}

impl PartialEq for ExtendedLevel {
    fn eq(&self, other: &Self) -> bool {
        compare_levels(self, other) == Ordering::Equal
    }
}

impl Eq for ExtendedLevel {}

impl PartialOrd for ExtendedLevel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedLevel {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_levels(self, other)
    }
}

/// Tokens: `-0`, `+0`, `inf`, `-<m>` and `<m>` with `m` in shortest
/// round-trip decimal form.
impl fmt::Display for ExtendedLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.branch, self.magnitude) {
            (Branch::Neg, m) if m == 0.0 => f.write_str("-0"),
            (Branch::Pos, m) if m == 0.0 => f.write_str("+0"),
            (Branch::Pos, m) if m.is_infinite() => f.write_str("inf"),
            (Branch::Neg, m) => write!(f, "-{m}"),
            (Branch::Pos, m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for ExtendedLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::InvalidLevel(s.to_string());
        let t = s.trim();
        match t {
            "-0" => return Ok(Self::NEG_ZERO),
            "+0" => return Ok(Self::POS_ZERO),
            "inf" | "+inf" => return Ok(Self::INFINITY),
            _ => {}
        }
        if let Some(rest) = t.strip_prefix('-') {
            let m: f64 = rest.parse().map_err(|_| bad())?;
            if m == 0.0 {
                return Ok(Self::NEG_ZERO);
            }
            Self::new(Branch::Neg, m).map_err(|_| bad())
        } else {
            let m: f64 = t.strip_prefix('+').unwrap_or(t).parse().map_err(|_| bad())?;
            Self::new(Branch::Pos, m).map_err(|_| bad())
        }
    }
}

impl Serialize for ExtendedLevel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExtendedLevel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
