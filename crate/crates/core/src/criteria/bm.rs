//! Beurling–Malliavin series `Σ |1/λ_k - c/(2π n_k)|` over distinct nonzero
//! integers `n_k`, and bisection for the critical `c`.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::pairwise_sum;
use crate::sequences::{ComplexPoint, PointSequence};

/// Largest integer magnitude the greedy search will target.
const MAX_TARGET: f64 = 4.5e15;

/// Minimum stored points for the dyadic-block test.
pub const MIN_POINTS: usize = 32;

/// Number of trailing dyadic blocks entering the slope fit.
const FIT_BLOCKS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Assignment {
    GreedyNearestDistinct,
    /// `(k, n_k)` with 1-based `k` into the stored points.
    Explicit { pairs: Vec<(usize, i64)> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesFlag {
    Converged,
    Divergent,
    Unknown,
}

/// Outcome of the dyadic-block test. Always heuristic: no finite
/// computation decides convergence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub flag: SeriesFlag,
    /// Least-squares slope of `log₂ B_j` over the last blocks.
    #[serde(with = "crate::nonfinite::option")]
    pub slope: Option<f64>,
    /// Estimated remainder of the series past the last block.
    #[serde(with = "crate::nonfinite::option")]
    pub tail_estimate: Option<f64>,
    /// Block sums `B_j = Σ_{2^j ≤ k < 2^{j+1}} term_k`.
    pub block_sums: Vec<f64>,
    pub heuristic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BMAssignment {
    pub c: f64,
    /// `(k, n_k)`, 1-based `k` in stored order.
    pub pairs: Vec<(usize, i64)>,
    pub terms: Vec<f64>,
    /// Partial sums at `k = 1, 2, 4, ...` and at the last stored point.
    pub partial_sums: Vec<(usize, f64)>,
    pub series: f64,
    pub convergence: Convergence,
}

/// Free integers on one side of the origin, as magnitudes `1, 2, ...`.
///
/// Two path-compressed "next free" maps give the nearest unused magnitude
/// above and below a target in amortized near-constant time.
#[derive(Default)]
struct FreeIntegers {
    up: HashMap<i64, i64>,
    down: HashMap<i64, i64>,
}

impl FreeIntegers {
    fn find(map: &mut HashMap<i64, i64>, m: i64) -> i64 {
        let mut root = m;
        while let Some(&next) = map.get(&root) {
            root = next;
        }
        let mut cur = m;
        while let Some(&next) = map.get(&cur) {
            map.insert(cur, root);
            cur = next;
        }
        root
    }

    /// Smallest free magnitude `≥ m`.
    fn above(&mut self, m: i64) -> i64 {
        Self::find(&mut self.up, m.max(1))
    }

    /// Largest free magnitude `≤ m`, or 0 when there is none.
    fn below(&mut self, m: i64) -> i64 {
        if m < 1 {
            return 0;
        }
        Self::find(&mut self.down, m)
    }

    fn take(&mut self, m: i64) {
        self.up.insert(m, m + 1);
        self.down.insert(m, m - 1);
    }
}

fn term(inv: ComplexPoint, c: f64, n: i64) -> f64 {
    let target = c / (2.0 * PI * n as f64);
    (inv.re - target).hypot(inv.im)
}

/// Greedy assignment: points in stored order (increasing modulus), each
/// taking the free nonzero integer nearest in the `c/(2πn)` sense, ties
/// toward smaller `|n|`.
fn greedy(points: &[ComplexPoint], c: f64) -> Vec<i64> {
    let mut pos = FreeIntegers::default();
    let mut neg = FreeIntegers::default();
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let inv = p.recip();
        let u = inv.re;
        let side_sign: i64 = if u < 0.0 { -1 } else { 1 };
        let side = if side_sign > 0 { &mut pos } else { &mut neg };
        let target = c / (2.0 * PI * u.abs());
        let m = if target.is_nan() || target >= MAX_TARGET {
            // Re(1/λ) ≈ 0: no integer tracks it, c/(2πn) → 0 is the best
            // approach, so take a fresh far-out integer.
            side.above(MAX_TARGET as i64)
        } else {
            let lo = side.below(target.floor() as i64);
            let hi = side.above(target.ceil() as i64);
            if lo == 0 {
                hi
            } else {
                let dl = term(inv, c, side_sign * lo);
                let dh = term(inv, c, side_sign * hi);
                if dl <= dh {
                    lo
                } else {
                    hi
                }
            }
        };
        side.take(m);
        out.push(side_sign * m);
    }
    out
}

fn ols_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Dyadic-block convergence test.
///
/// Over the last four complete blocks, `s` is the fitted slope of
/// `log₂ B_j`: `s ≤ -0.5` reads as convergent with geometric remainder
/// `B_J·r/(1-r)`, `r = 2^s`; `s ≥ -0.2` as divergent; anything between is
/// unknown. Blocks negligible against `Σ|1/λ_k|` over the same block count as
/// converged with zero remainder.
fn block_test(terms: &[f64], scale: &[f64]) -> Convergence {
    let mut block_sums = Vec::new();
    let mut block_scale = Vec::new();
    let mut start = 1usize;
    while 2 * start - 1 <= terms.len() {
        block_sums.push(pairwise_sum(&terms[start - 1..2 * start - 1]));
        block_scale.push(pairwise_sum(&scale[start - 1..2 * start - 1]));
        start *= 2;
    }
    let mut result = Convergence {
        flag: SeriesFlag::Unknown,
        slope: None,
        tail_estimate: None,
        block_sums: block_sums.clone(),
        heuristic: true,
    };
    if block_sums.len() < FIT_BLOCKS {
        return result;
    }
    let from = block_sums.len() - FIT_BLOCKS;
    let last = &block_sums[from..];
    if last.iter().zip(&block_scale[from..]).all(|(b, s)| *b <= 1e-12 * s) {
        result.flag = SeriesFlag::Converged;
        result.tail_estimate = Some(0.0);
        return result;
    }
    let logs: Vec<f64> = last.iter().map(|b| b.max(f64::MIN_POSITIVE).log2()).collect();
    let s = ols_slope(&logs);
    result.slope = Some(s);
    if s <= -0.5 {
        let r = s.exp2();
        result.flag = SeriesFlag::Converged;
        result.tail_estimate = Some(last[FIT_BLOCKS - 1] * r / (1.0 - r));
    } else if s >= -0.2 {
        result.flag = SeriesFlag::Divergent;
    }
    result
}

/// Builds the series for one `c`.
pub fn bm_series(seq: &PointSequence, c: f64, assignment: &Assignment) -> Result<BMAssignment> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::param("c", "must be positive"));
    }
    let points = seq.points();
    let integers = match assignment {
        Assignment::GreedyNearestDistinct => greedy(points, c),
        Assignment::Explicit { pairs } => explicit_integers(pairs, points.len())?,
    };
    let terms: Vec<f64> = points
        .iter()
        .zip(&integers)
        .map(|(p, &n)| term(p.recip(), c, n))
        .collect();
    let scale: Vec<f64> = points.iter().map(|p| 1.0 / p.modulus()).collect();

    let mut partial_sums = Vec::new();
    let mut running = 0.0;
    let mut next = 1;
    for (i, t) in terms.iter().enumerate() {
        running += t;
        let k = i + 1;
        if k == next || k == terms.len() {
            partial_sums.push((k, running));
            if k == next {
                next *= 2;
            }
        }
    }
    Ok(BMAssignment {
        c,
        pairs: integers.iter().enumerate().map(|(i, &n)| (i + 1, n)).collect(),
        series: pairwise_sum(&terms),
        convergence: block_test(&terms, &scale),
        terms,
        partial_sums,
    })
}

fn explicit_integers(pairs: &[(usize, i64)], len: usize) -> Result<Vec<i64>> {
    let mut out = vec![0i64; len];
    let mut seen = BTreeSet::new();
    for &(k, n) in pairs {
        if k == 0 || k > len {
            return Err(Error::param("pairs", format!("index {k} is outside 1..={len}")));
        }
        if n == 0 {
            return Err(Error::param("pairs", "integers must be nonzero"));
        }
        if !seen.insert(n) {
            return Err(Error::DuplicateInteger { n });
        }
        if out[k - 1] != 0 {
            return Err(Error::param("pairs", format!("index {k} assigned twice")));
        }
        out[k - 1] = n;
    }
    if let Some(i) = out.iter().position(|&n| n == 0) {
        return Err(Error::param("pairs", format!("index {} has no integer", i + 1)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub c: f64,
    pub flag: SeriesFlag,
    #[serde(with = "crate::nonfinite::option")]
    pub slope: Option<f64>,
    /// `Unknown` was resolved by the slope midpoint `-0.35`.
    pub forced: bool,
}

impl Probe {
    /// Branch taken by the bisection.
    fn converged(&self) -> bool {
        match self.flag {
            SeriesFlag::Converged => true,
            SeriesFlag::Divergent => false,
            SeriesFlag::Unknown => self.slope.is_some_and(|s| s < UNKNOWN_SPLIT),
        }
    }
}

/// Midpoint of the convergent and divergent slope thresholds.
const UNKNOWN_SPLIT: f64 = -0.35;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BMRadius {
    pub radius_estimate: f64,
    pub bracket: [f64; 2],
    pub probes: Vec<Probe>,
    pub heuristic: bool,
    pub warnings: Vec<String>,
}

fn probe(seq: &PointSequence, c: f64) -> Result<Probe> {
    let s = bm_series(seq, c, &Assignment::GreedyNearestDistinct)?;
    Ok(Probe {
        c,
        flag: s.convergence.flag,
        slope: s.convergence.slope,
        forced: s.convergence.flag == SeriesFlag::Unknown,
    })
}

/// Brackets the `c` where the greedy series switches from divergent (small
/// `c`) to convergent (large `c`).
///
/// Each round probes three interior points in parallel and keeps the
/// quarter where the flag flips. If the flags are not monotone in `c`, the
/// bracket is widened to cover every flip and a warning is recorded.
pub fn bm_radius(seq: &PointSequence, c_lo: f64, c_hi: f64, tol: f64) -> Result<BMRadius> {
    if !(c_lo > 0.0 && c_lo.is_finite() && c_hi.is_finite() && c_lo < c_hi) {
        return Err(Error::param("bracket", "need 0 < c_lo < c_hi"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::param("tol", "must be positive"));
    }
    if seq.len() < MIN_POINTS {
        return Err(Error::param(
            "sequence",
            format!("the block test needs at least {MIN_POINTS} stored points"),
        ));
    }
    let mut warnings = Vec::new();
    let mut probes: Vec<Probe> = [c_lo, c_hi]
        .par_iter()
        .map(|&c| probe(seq, c))
        .collect::<Result<_>>()?;
    if probes[0].converged() {
        warnings.push(format!("series already converges at c_lo = {c_lo}"));
    }
    if !probes[1].converged() {
        warnings.push(format!("series does not converge at c_hi = {c_hi}"));
    }

    let (mut lo, mut hi) = (c_lo, c_hi);
    while hi - lo > tol {
        let cs: Vec<f64> = (1..=3).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect();
        let round: Vec<Probe> = cs.par_iter().map(|&c| probe(seq, c)).collect::<Result<_>>()?;
        // Keep the first quarter whose right end converges.
        let mut new = (cs[2], hi);
        for (i, p) in round.iter().enumerate() {
            if p.converged() {
                new = (if i == 0 { lo } else { cs[i - 1] }, cs[i]);
                break;
            }
        }
        probes.extend(round);
        (lo, hi) = new;
    }

    probes.sort_by(|a, b| a.c.total_cmp(&b.c));
    let max_div = probes.iter().filter(|p| !p.converged()).map(|p| p.c).fold(f64::NAN, f64::max);
    let min_conv = probes.iter().filter(|p| p.converged()).map(|p| p.c).fold(f64::NAN, f64::min);
    let bracket = if max_div.is_nan() || min_conv.is_nan() {
        [lo, hi]
    } else if max_div < min_conv {
        [max_div, min_conv]
    } else {
        warnings.push("convergence flag is not monotone in c; bracket widened over all flips".into());
        [min_conv, max_div]
    };
    if probes.iter().any(|p| p.forced) {
        warnings.push("some probes were undecided and resolved by the slope midpoint".into());
    }
    Ok(BMRadius {
        radius_estimate: 0.5 * (bracket[0] + bracket[1]),
        bracket,
        probes,
        heuristic: true,
        warnings,
    })
}
