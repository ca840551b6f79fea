//! CSV, JSON and SVG output of level summaries and diagrams.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::filtration::{intervals_1d, DiagramSlice, LevelSummary};
use crate::level::{Branch, ExtendedLevel};
use crate::space::CostSpace;

pub const SCHEMA_VERSION: u32 = 1;

/// `%.9g`: nine significant digits, trailing zeros dropped, `inf` for
/// infinity.
pub fn format_g9(v: f64) -> String {
    const P: i32 = 9;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..P).contains(&exp) {
        let fixed = format!("{:.*}", (P - 1 - exp) as usize, v);
        strip_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Per-sample CSV: `index,coord_0[,coord_1...],lambda,beta`, `beta` empty
/// when undefined.
pub fn export_levels_csv(summary: &LevelSummary, space: &CostSpace) -> String {
    let dim = space.coords().map_or(0, |c| c.dim());
    let mut out = String::from("index");
    for a in 0..dim {
        write!(out, ",coord_{a}").unwrap();
    }
    out.push_str(",lambda,beta\n");
    for (x, lambda, beta) in summary.rows() {
        write!(out, "{x}").unwrap();
        if let Some(c) = space.coords() {
            for v in c.point(x) {
                write!(out, ",{}", format_g9(*v)).unwrap();
            }
        }
        let beta = beta.map(format_g9).unwrap_or_default();
        writeln!(out, ",{},{beta}", format_g9(lambda)).unwrap();
    }
    out
}

/// A real number that serializes `inf` as the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Real;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or \"inf\"")
            }
            fn visit_f64<E>(self, v: f64) -> std::result::Result<Real, E> {
                Ok(Real(v))
            }
            fn visit_i64<E>(self, v: i64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_u64<E>(self, v: u64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<Real, E> {
                match v {
                    "inf" | "+inf" => Ok(Real(f64::INFINITY)),
                    "-inf" => Ok(Real(f64::NEG_INFINITY)),
                    _ => Err(E::custom(format!("expected a number or \"inf\", got \"{v}\""))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemMeta {
    pub name: String,
    /// `map`, `semiflow` or `table`.
    pub kind: String,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    pub tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_stable: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceDoc {
    pub level: ExtendedLevel,
    pub members: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointDoc {
    pub index: usize,
    pub coords: Vec<f64>,
    pub lambda: Real,
    /// `null` when undefined.
    pub beta: Option<Real>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderHints {
    pub eps_min: Real,
    pub eps_max: Real,
    pub eps_label: String,
    pub state_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramDocument {
    pub schema_version: u32,
    pub system: SystemMeta,
    pub slices: Vec<SliceDoc>,
    pub points: Vec<PointDoc>,
    pub render: RenderHints,
}

impl DiagramDocument {
    /// Assembles a document; slices must be ascending.
    pub fn new(
        system: SystemMeta,
        summary: &LevelSummary,
        slices: &[DiagramSlice],
        space: &CostSpace,
    ) -> Result<Self> {
        if let Some(i) = slices.windows(2).position(|w| w[0].level > w[1].level) {
            return Err(Error::UnsortedLevels(i + 1));
        }
        let one_d = space.coords().is_some_and(|c| c.dim() == 1);
        let slices = slices
            .iter()
            .map(|s| {
                let mut members = s.members.clone();
                members.sort_unstable();
                let intervals = if one_d {
                    Some(
                        intervals_1d(space, &members)?
                            .into_iter()
                            .map(|(a, b)| [a, b])
                            .collect(),
                    )
                } else {
                    None
                };
                Ok(SliceDoc {
                    level: s.level,
                    members,
                    intervals,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let points = summary
            .rows()
            .map(|(index, lambda, beta)| PointDoc {
                index,
                coords: space.coords().map_or_else(Vec::new, |c| c.point(index).to_vec()),
                lambda: Real(lambda),
                beta: beta.map(Real),
            })
            .collect();
        let signed = |l: Option<&SliceDoc>| l.map_or(0.0, |s| s.level.signed_value());
        let render = RenderHints {
            eps_min: Real(signed(slices.first())),
            eps_max: Real(signed(slices.last())),
            eps_label: "eps".into(),
            state_label: "x".into(),
        };
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            system,
            slices,
            points,
            render,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::Spec(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        Ok(doc)
    }
}

/// Convenience alias for [`DiagramDocument::to_json`].
pub fn export_diagram_json(doc: &DiagramDocument) -> Result<String> {
    doc.to_json()
}

const MARGIN_LEFT: f64 = 56.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 16.0;
const MARGIN_BOTTOM: f64 = 40.0;
/// Gap between the `-0` and `+0` columns.
const SPLIT_GAP: f64 = 1.0;

/// Checks that every sample, once in a slice, stays in all later slices.
pub fn check_column_monotonicity(doc: &DiagramDocument) -> Result<()> {
    for (i, w) in doc.slices.windows(2).enumerate() {
        if let Some(x) = w[0].members.iter().find(|m| w[1].members.binary_search(m).is_err()) {
            return Err(Error::Spec(format!(
                "slices are not nested: sample {x} is in slice {} (`{}`) but not in `{}`",
                i,
                w[0].level,
                w[1].level
            )));
        }
    }
    Ok(())
}

/// Diagram over the `(eps, x)` plane: one column per slice, negative
/// levels left of a dashed rule at the split origin, positive levels right.
pub fn render_svg(doc: &DiagramDocument, width: u32, height: u32) -> Result<String> {
    if let Some(p) = doc.points.iter().find(|p| p.coords.len() != 1) {
        return Err(Error::NotOneDimensional(p.coords.len()));
    }
    check_column_monotonicity(doc)?;
    let (w, h) = (width as f64, height as f64);
    let plot_w = (w - MARGIN_LEFT - MARGIN_RIGHT).max(1.0);
    let plot_h = (h - MARGIN_TOP - MARGIN_BOTTOM).max(1.0);
    let (lo, hi) = doc
        .points
        .iter()
        .map(|p| p.coords[0])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo < hi { (lo, hi) } else { (lo - 1.0, lo + 1.0) };
    let half_cell = doc.system.h.unwrap_or((hi - lo) / doc.points.len().max(1) as f64) / 2.0;
    let y_of = |v: f64| MARGIN_TOP + (hi + half_cell - v) / (hi - lo + 2.0 * half_cell) * plot_h;

    let n = doc.slices.len();
    let split = doc.slices.iter().position(|s| s.level.branch() == Branch::Pos);
    let has_split = matches!(split, Some(k) if k > 0);
    let col_w = (plot_w - if has_split { SPLIT_GAP } else { 0.0 }) / n.max(1) as f64;
    let x_of = |i: usize| {
        let gap = match split {
            Some(k) if has_split && i >= k => SPLIT_GAP,
            _ => 0.0,
        };
        MARGIN_LEFT + i as f64 * col_w + gap
    };

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<g fill="black" stroke="none">"#).unwrap();
    for (i, slice) in doc.slices.iter().enumerate() {
        let runs: Vec<[f64; 2]> = match &slice.intervals {
            Some(iv) => iv.clone(),
            None => slice
                .members
                .iter()
                .filter_map(|&m| doc.points.iter().find(|p| p.index == m))
                .map(|p| [p.coords[0], p.coords[0]])
                .collect(),
        };
        for [a, b] in runs {
            let top = y_of(b + half_cell);
            let bottom = y_of(a - half_cell);
            writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                x_of(i),
                top,
                col_w,
                (bottom - top).max(1.0)
            )
            .unwrap();
        }
    }
    writeln!(s, "</g>").unwrap();

    let axis_y = MARGIN_TOP + plot_h;
    writeln!(
        s,
        r#"<g stroke="black" fill="none"><line x1="{:.2}" y1="{axis_y:.2}" x2="{:.2}" y2="{axis_y:.2}"/><line x1="{MARGIN_LEFT:.2}" y1="{MARGIN_TOP:.2}" x2="{MARGIN_LEFT:.2}" y2="{axis_y:.2}"/></g>"#,
        MARGIN_LEFT,
        MARGIN_LEFT + plot_w
    )
    .unwrap();
    if let (true, Some(k)) = (has_split, split) {
        let x = x_of(k) - SPLIT_GAP / 2.0;
        writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{MARGIN_TOP:.2}" x2="{x:.2}" y2="{axis_y:.2}" stroke="gray" stroke-dasharray="4 3"/>"#
        )
        .unwrap();
    }
    writeln!(s, r#"<g font-family="sans-serif" font-size="10" fill="black">"#).unwrap();
    let every = (n / 8).max(1);
    for (i, slice) in doc.slices.iter().enumerate() {
        let zero = slice.level.magnitude() == 0.0;
        if i % every == 0 || zero || i + 1 == n {
            writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                x_of(i) + col_w / 2.0,
                axis_y + 14.0,
                slice.level
            )
            .unwrap();
        }
    }
    for v in [lo, (lo + hi) / 2.0, hi] {
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 4.0,
            y_of(v) + 3.0,
            format_g9(v)
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        h - 6.0,
        xml_escape(&doc.render.eps_label)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="12" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        xml_escape(&doc.render.state_label)
    )
    .unwrap();
    writeln!(s, "</g>\n</svg>").unwrap();
    Ok(s)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
