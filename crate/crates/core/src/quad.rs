//! Globally adaptive Gauss–Kronrod quadrature.
//!
//! Every integral in the crate goes through [`Integral`]: a set of pieces
//! (interval plus integrand) is cut at caller-supplied breakpoints, refined
//! geometrically toward integrable singularities, and then bisected panel by
//! panel, always splitting the panel with the largest error estimate, until
//! the global error target is met or refinement is exhausted.
//!
//! The final sum is taken over panels sorted by position with a fixed
//! pairwise tree, so results do not depend on the refinement order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonfinite;

/// Tolerances and limits for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_refinement_depth: u32,
    /// Half-width of the excluded window around a principal-value point.
    /// `None` picks it from the geometry of the integrand.
    pub pv_window: Option<f64>,
    /// Hard cap on integrand evaluations for one integral.
    pub max_evaluations: u64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_refinement_depth: 40,
            pv_window: None,
            max_evaluations: 4_000_000,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::param("rel_tol", "must be a positive finite number"));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::param("abs_tol", "must be a positive finite number"));
        }
        if self.max_refinement_depth == 0 {
            return Err(Error::param("max_refinement_depth", "must be at least 1"));
        }
        if let Some(w) = self.pv_window {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::param("pv_window", "must be a positive finite number"));
            }
        }
        if self.max_evaluations < 15 {
            return Err(Error::param("max_evaluations", "must allow at least one rule application"));
        }
        Ok(())
    }

    /// Tolerance that a result of magnitude `value` must meet.
    pub fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }

    /// Same config with both tolerances scaled by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol * factor,
            abs_tol: self.abs_tol * factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxRefinement,
    /// The principal value does not exist; `value` carries the sign of the
    /// divergence as an infinity.
    Divergent,
    SingularFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    #[serde(with = "nonfinite")]
    pub value: f64,
    #[serde(with = "nonfinite")]
    pub abs_error: f64,
    pub status: Status,
    pub evaluations: u64,
}

impl QuadratureResult {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            abs_error: 0.0,
            status: Status::Converged,
            evaluations: 0,
        }
    }

    pub fn is_converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            abs_error: self.abs_error * factor.abs(),
            ..self
        }
    }

    /// Adds an exactly known constant to the value.
    pub fn shifted(self, offset: f64) -> Self {
        Self {
            value: self.value + offset,
            ..self
        }
    }

    pub fn negated(self) -> Self {
        self.scaled(-1.0)
    }
}

/// 15-point Kronrod abscissae (non-negative half) and weights, with the
/// embedded 7-point Gauss weights. Values from QUADPACK `qk15`.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Number of geometric levels used when grading a mesh toward a point.
pub(crate) const GRADING_LEVELS: i32 = 36;

struct RuleOutput {
    value: f64,
    error: f64,
}

fn kronrod15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> RuleOutput {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let abs_half = half.abs();

    let fc = f(center);
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];

    for (j, wg) in WG.iter().enumerate().take(3) {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg += wg * (f1 + f2);
        resk += WGK[jtw] * (f1 + f2);
        resabs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk += WGK[jtwm1] * (f1 + f2);
        resabs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }

    let value = resk * half;
    resabs *= abs_half;
    resasc *= abs_half;
    let mut error = ((resk - resg) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    RuleOutput { value, error }
}

/// Sums with a fixed pairwise tree. The result depends only on the order of
/// `values`, never on thread scheduling.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

#[derive(Clone, Copy)]
struct Panel {
    piece: usize,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: u32,
    seq: u64,
}

struct ByError(Panel);

impl PartialEq for ByError {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for ByError {}
impl PartialOrd for ByError {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ByError {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .error
            .total_cmp(&other.0.error)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

type Integrand<'a> = &'a (dyn Fn(f64) -> f64 + Sync);

/// A sum of one-dimensional integrals evaluated under one global error
/// target.
pub(crate) struct Integral<'a> {
    integrands: Vec<Integrand<'a>>,
    intervals: Vec<(usize, f64, f64)>,
}

impl<'a> Integral<'a> {
    pub(crate) fn new() -> Self {
        Self {
            integrands: Vec::new(),
            intervals: Vec::new(),
        }
    }

    /// Adds `∫_a^b f`, cut at every breakpoint inside `(a, b)` and graded
    /// geometrically toward every point of `graded` lying in `[a, b]`.
    pub(crate) fn add(
        &mut self,
        a: f64,
        b: f64,
        f: Integrand<'a>,
        breaks: &[f64],
        graded: &[f64],
    ) -> &mut Self {
        if b.partial_cmp(&a) != Some(std::cmp::Ordering::Greater) {
            return self;
        }
        let id = self.integrands.len();
        self.integrands.push(f);

        let width = b - a;
        let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&p| p > a && p < b).collect();
        for &g in graded {
            if g < a || g > b {
                continue;
            }
            if g > a && g < b {
                cuts.push(g);
            }
            let reach = (g - a).max(b - g);
            for level in 1..=GRADING_LEVELS {
                let step = reach * 2f64.powi(-level);
                for p in [g - step, g + step] {
                    if p > a && p < b {
                        cuts.push(p);
                    }
                }
            }
        }
        cuts.push(a);
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        let min_gap = 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(width);
        let mut last = a;
        for &p in &cuts[1..] {
            if p - last > min_gap || p == b {
                if p > last {
                    self.intervals.push((id, last, p));
                }
                last = p;
            }
        }
        self
    }

    pub(crate) fn integrate(&self, cfg: &QuadratureConfig) -> QuadratureResult {
        if self.intervals.is_empty() {
            return QuadratureResult::exact(0.0);
        }
        let mut evaluations = 0u64;
        let mut seq = 0u64;
        let mut heap = BinaryHeap::new();
        let mut frozen: Vec<Panel> = Vec::new();
        let mut total_value = 0.0;
        let mut total_error = 0.0;

        let eval_panel = |piece: usize, a: f64, b: f64, depth: u32, seq: u64| {
            let out = kronrod15(self.integrands[piece], a, b);
            Panel {
                piece,
                a,
                b,
                value: out.value,
                error: out.error,
                depth,
                seq,
            }
        };

        for &(piece, a, b) in &self.intervals {
            let p = eval_panel(piece, a, b, 0, seq);
            seq += 1;
            evaluations += 15;
            if !p.value.is_finite() || !p.error.is_finite() {
                return singular(evaluations);
            }
            total_value += p.value;
            total_error += p.error;
            heap.push(ByError(p));
        }

        let status = loop {
            if total_error <= cfg.target(total_value) {
                break Status::Converged;
            }
            if evaluations + 30 > cfg.max_evaluations {
                break Status::MaxRefinement;
            }
            let Some(ByError(worst)) = heap.pop() else {
                break Status::MaxRefinement;
            };
            let mid = 0.5 * (worst.a + worst.b);
            if worst.depth >= cfg.max_refinement_depth || !(mid > worst.a && mid < worst.b) {
                frozen.push(worst);
                continue;
            }
            let left = eval_panel(worst.piece, worst.a, mid, worst.depth + 1, seq);
            let right = eval_panel(worst.piece, mid, worst.b, worst.depth + 1, seq + 1);
            seq += 2;
            evaluations += 30;
            if !(left.value.is_finite()
                && right.value.is_finite()
                && left.error.is_finite()
                && right.error.is_finite())
            {
                return singular(evaluations);
            }
            total_value += left.value + right.value - worst.value;
            total_error += left.error + right.error - worst.error;
            heap.push(ByError(left));
            heap.push(ByError(right));
        };

        let mut panels: Vec<Panel> = heap.into_iter().map(|p| p.0).chain(frozen).collect();
        panels.sort_by(|x, y| x.piece.cmp(&y.piece).then(x.a.total_cmp(&y.a)));
        let values: Vec<f64> = panels.iter().map(|p| p.value).collect();
        let errors: Vec<f64> = panels.iter().map(|p| p.error).collect();
        let value = pairwise_sum(&values);
        let abs_error = pairwise_sum(&errors);
        let status = if status == Status::Converged || abs_error <= cfg.target(value) {
            Status::Converged
        } else {
            Status::MaxRefinement
        };
        QuadratureResult {
            value,
            abs_error,
            status,
            evaluations,
        }
    }
}

fn singular(evaluations: u64) -> QuadratureResult {
    QuadratureResult {
        value: f64::NAN,
        abs_error: f64::INFINITY,
        status: Status::SingularFailure,
        evaluations,
    }
}

/// Convenience wrapper for a single integrand.
pub(crate) fn integrate(
    f: Integrand<'_>,
    a: f64,
    b: f64,
    breaks: &[f64],
    graded: &[f64],
    cfg: &QuadratureConfig,
) -> QuadratureResult {
    let mut integral = Integral::new();
    integral.add(a, b, f, breaks, graded);
    integral.integrate(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let f = |x: f64| 3.0 * x * x - 2.0 * x + 1.0;
        let r = integrate(&f, 0.0, 2.0, &[], &[], &QuadratureConfig::default());
        assert_relative_eq!(r.value, 8.0 - 4.0 + 2.0, max_relative = 1e-14);
        assert!(r.is_converged());
    }

    #[test]
    fn log_singularity_with_grading() {
        // ∫_0^1 log(1/t) dt = 1
        let f = |t: f64| -t.ln();
        let r = integrate(&f, 0.0, 1.0, &[], &[0.0], &QuadratureConfig::default());
        assert!(r.is_converged(), "{r:?}");
        assert!((r.value - 1.0).abs() < 1e-9, "{}", r.value);
        assert!((r.value - 1.0).abs() <= r.abs_error.max(1e-12) * 10.0);
    }

    #[test]
    fn inverse_sqrt_singularity() {
        let f = |t: f64| 1.0 / t.sqrt();
        let r = integrate(&f, 0.0, 4.0, &[], &[0.0], &QuadratureConfig::default());
        assert!((r.value - 4.0).abs() < 1e-7, "{r:?}");
    }

    #[test]
    fn kink_is_resolved_by_breakpoint() {
        let f = |t: f64| (t - 0.3).abs();
        let r = integrate(&f, 0.0, 1.0, &[0.3], &[], &QuadratureConfig::default());
        assert_relative_eq!(r.value, 0.045 + 0.245, max_relative = 1e-13);
    }

    #[test]
    fn non_finite_integrand_is_singular_failure() {
        let f = |_t: f64| f64::NAN;
        let r = integrate(&f, 0.0, 1.0, &[], &[], &QuadratureConfig::default());
        assert_eq!(r.status, Status::SingularFailure);
    }

    #[test]
    fn unreachable_tolerance_reports_max_refinement() {
        let cfg = QuadratureConfig {
            rel_tol: 1e-30,
            abs_tol: 1e-300,
            max_refinement_depth: 3,
            ..Default::default()
        };
        let f = |t: f64| (50.0 * t).sin().abs();
        let r = integrate(&f, 0.0, 10.0, &[], &[], &cfg);
        assert_eq!(r.status, Status::MaxRefinement);
        assert!(r.abs_error > 0.0);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.0, 4.0, 5.0]), 15.0);
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::default().validate().is_ok());
        let bad = QuadratureConfig {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
