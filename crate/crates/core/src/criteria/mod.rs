//! Sufficient criteria for completeness and incompleteness of `Exp^{iΛ}` on
//! `I_d`, and the verdict semantics that combine them.

pub mod bm;
pub mod sector;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::search::{SweepReport, Trend};

pub use bm::{bm_radius, bm_series, Assignment, BMAssignment, BMRadius, Convergence, Probe, SeriesFlag};
pub use sector::{kernel_bound_check, sector_test, KernelBound, SectorReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictClass {
    Complete,
    /// Incomplete after removing one point.
    IncompleteMinusOne,
    /// Incomplete after removing two points.
    IncompleteMinusTwo,
    /// Incomplete on every segment.
    IncompleteAllD,
    Inconclusive,
}

impl VerdictClass {
    fn is_incomplete(self) -> bool {
        matches!(
            self,
            VerdictClass::IncompleteMinusOne | VerdictClass::IncompleteMinusTwo | VerdictClass::IncompleteAllD
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    SectorTheorem2,
    BmSeries,
    FunctionalDivergence,
    FunctionalBounded,
}

/// Function space on the segment `I_d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    C,
    /// `L^p` with `p ≥ 2`.
    #[serde(rename = "Lp_ge2")]
    LpGe2,
    /// `L^p` with `1 ≤ p < 2`.
    #[serde(rename = "Lp_lt2")]
    LpLt2,
}

impl Space {
    pub const ALL: [Space; 3] = [Space::C, Space::LpGe2, Space::LpLt2];

    /// Incompleteness class after the point removals this space needs.
    fn incomplete_class(self) -> VerdictClass {
        match self {
            Space::C | Space::LpGe2 => VerdictClass::IncompleteMinusOne,
            Space::LpLt2 => VerdictClass::IncompleteMinusTwo,
        }
    }
}

/// Segment length a verdict applies to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentLength {
    Value(f64),
    All,
}

impl Serialize for SegmentLength {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SegmentLength::Value(v) => s.serialize_f64(*v),
            SegmentLength::All => s.serialize_str("all"),
        }
    }
}

impl<'de> Deserialize<'de> for SegmentLength {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(SegmentLength::Value(v)),
            Raw::Str(s) if s == "all" => Ok(SegmentLength::All),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"all\", got {s:?}"))),
        }
    }
}

impl fmt::Display for SegmentLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmentLength::Value(v) => write!(f, "{v}"),
            SegmentLength::All => f.write_str("all"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub class: VerdictClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<Criterion>,
    pub space: Space,
    pub d: SegmentLength,
    /// The decision rests on a numerical heuristic (series convergence or a
    /// finite search), not on a verified inequality.
    pub heuristic: bool,
    /// Human-readable account of the inequality or trend that fired.
    pub evidence: String,
}

/// Criterion outputs available to [`classify`].
#[derive(Debug, Clone, Default)]
pub struct Evidence<'a> {
    pub sector: Option<&'a SectorReport>,
    pub bm_series: Option<&'a BMAssignment>,
    pub bm_radius: Option<&'a BMRadius>,
    pub sweep: Option<&'a SweepReport>,
}

impl Evidence<'_> {
    fn is_empty(&self) -> bool {
        self.sector.is_none() && self.bm_series.is_none() && self.bm_radius.is_none() && self.sweep.is_none()
    }
}

struct Finding {
    class: VerdictClass,
    criterion: Criterion,
    heuristic: bool,
    d: SegmentLength,
    evidence: String,
}

fn findings(space: Space, d: f64, ev: &Evidence<'_>) -> Vec<Finding> {
    let mut out = Vec::new();
    if let Some(s) = ev.sector.filter(|s| s.fired()) {
        out.push(Finding {
            class: VerdictClass::IncompleteAllD,
            criterion: Criterion::SectorTheorem2,
            heuristic: false,
            d: SegmentLength::All,
            evidence: format!(
                "all points in the sector of opening {:.6}, Σ|Im 1/λ| ≤ {:.6e}, tail index K = {}",
                s.alpha,
                s.stored_sum + s.tail_bound.unwrap_or(f64::NAN),
                s.tail_index.map_or("n/a".to_string(), |k| k.to_string())
            ),
        });
    }
    if let Some(b) = ev.bm_series {
        match b.convergence.flag {
            SeriesFlag::Converged if d > b.c => out.push(Finding {
                class: space.incomplete_class(),
                criterion: Criterion::BmSeries,
                heuristic: true,
                d: SegmentLength::Value(d),
                evidence: format!("series converges at c = {:.6} < d (sum {:.6e})", b.c, b.series),
            }),
            SeriesFlag::Divergent if d < b.c => out.push(Finding {
                class: VerdictClass::Complete,
                criterion: Criterion::BmSeries,
                heuristic: true,
                d: SegmentLength::Value(d),
                evidence: format!("series diverges at c = {:.6} > d", b.c),
            }),
            _ => {}
        }
    }
    if let Some(r) = ev.bm_radius {
        let [lo, hi] = r.bracket;
        if d > hi {
            out.push(Finding {
                class: space.incomplete_class(),
                criterion: Criterion::BmSeries,
                heuristic: true,
                d: SegmentLength::Value(d),
                evidence: format!("d exceeds the radius bracket [{lo:.6}, {hi:.6}]"),
            });
        } else if d < lo {
            out.push(Finding {
                class: VerdictClass::Complete,
                criterion: Criterion::BmSeries,
                heuristic: true,
                d: SegmentLength::Value(d),
                evidence: format!("d is below the radius bracket [{lo:.6}, {hi:.6}]"),
            });
        }
    }
    if let Some(s) = ev.sweep {
        match s.trend {
            Trend::Growing => out.push(Finding {
                class: VerdictClass::Complete,
                criterion: Criterion::FunctionalDivergence,
                heuristic: true,
                d: SegmentLength::Value(d),
                evidence: format!(
                    "functional grows with the support radius (log-log slope {:.3}); evidence only",
                    s.slope.unwrap_or(f64::NAN)
                ),
            }),
            Trend::Bounded => out.push(Finding {
                class: VerdictClass::Inconclusive,
                criterion: Criterion::FunctionalBounded,
                heuristic: true,
                d: SegmentLength::Value(d),
                evidence: "functional plateaus over the sweep; a finite search proves no bound".into(),
            }),
            Trend::Undetermined => {}
        }
    }
    out
}

/// Per-space verdicts for `Exp^{iΛ}` on `I_d`.
///
/// Completeness needs a growing functional trend or a divergent series;
/// incompleteness needs the sector test or a convergent series, and then
/// holds after removing one point (`C`, `L^p`, `p ≥ 2`) or two points
/// (`L^p`, `p < 2`). Contradicting findings give `inconclusive`.
pub fn classify(d: f64, evidence: &Evidence<'_>) -> Result<Vec<Verdict>> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::param("d", "must be positive"));
    }
    if evidence.is_empty() {
        return Err(Error::param("evidence", "at least one criterion output is required"));
    }
    let verdicts = Space::ALL
        .iter()
        .map(|&space| {
            let found = findings(space, d, evidence);
            let complete = found.iter().any(|f| f.class == VerdictClass::Complete);
            let incomplete = found.iter().any(|f| f.class.is_incomplete());
            if complete && incomplete {
                let list: Vec<String> = found.iter().map(|f| f.evidence.clone()).collect();
                return Verdict {
                    class: VerdictClass::Inconclusive,
                    criterion: None,
                    space,
                    d: SegmentLength::Value(d),
                    heuristic: true,
                    evidence: format!("criteria disagree: {}", list.join("; ")),
                };
            }
            // Findings are ordered by strength: sector, series, search.
            match found.into_iter().next() {
                Some(f) => Verdict {
                    class: f.class,
                    criterion: Some(f.criterion),
                    space,
                    d: f.d,
                    heuristic: f.heuristic,
                    evidence: f.evidence,
                },
                None => Verdict {
                    class: VerdictClass::Inconclusive,
                    criterion: None,
                    space,
                    d: SegmentLength::Value(d),
                    heuristic: false,
                    evidence: "no criterion fired".into(),
                },
            }
        })
        .collect();
    Ok(verdicts)
}
