//! Sector criterion: points inside a double sector `α ≤ |arg λ| ≤ π - α`
//! with `Σ |Im(1/λ_k)| < ∞` give incompleteness on every segment.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::VerdictClass;
use crate::error::{Error, Result};
use crate::functional::integral_of;
use crate::quad::QuadratureConfig;
use crate::sequences::{ComplexPoint, Generator, PointSequence};
use crate::testfn::TestFunction;
use crate::transforms::poisson;

/// Slack allowed on the angle condition, absorbing rounding in `arg`.
pub const ANGLE_TOL: f64 = 1e-12;

/// Fraction of `(d/2)·sin²α` used as the tail target `ε`.
pub const EPSILON_FACTOR: f64 = 0.9;

fn in_sector(z: ComplexPoint, alpha: f64) -> bool {
    let a = z.arg().abs();
    a >= alpha - ANGLE_TOL && a <= PI - alpha + ANGLE_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorReport {
    pub alpha: f64,
    pub d: f64,
    pub verdict: VerdictClass,
    pub angle_condition: bool,
    /// 1-based index of the first stored point outside the sector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offending_index: Option<usize>,
    /// `Σ |Im(1/λ_k)|` over the stored points.
    pub stored_sum: f64,
    /// Bound on the same sum over the points beyond the truncation.
    #[serde(with = "crate::nonfinite::option")]
    pub tail_bound: Option<f64>,
    /// `(d/2)·sin²α·0.9`.
    pub epsilon: f64,
    /// Smallest `K` with `Σ_{k>K} |Im(1/λ_k)| < ε`; dropping (or moving to
    /// the real axis) the first `K` points does not change the verdict.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_index: Option<u64>,
    pub notes: Vec<String>,
}

impl SectorReport {
    pub fn fired(&self) -> bool {
        self.verdict == VerdictClass::IncompleteAllD
    }
}

/// Suffix sums `S_K = Σ_{K<k≤N} a_k + tail`, for `K = 0..=N`.
fn suffix_sums(terms: &[f64], tail: f64) -> Vec<f64> {
    let mut out = vec![0.0; terms.len() + 1];
    out[terms.len()] = tail;
    for k in (0..terms.len()).rev() {
        out[k] = out[k + 1] + terms[k];
    }
    out
}

/// Smallest `n ≥ start` with `bound(n) < eps`, for a nonincreasing `bound`.
fn first_below(start: u64, eps: f64, bound: impl Fn(u64) -> Option<f64>) -> Option<u64> {
    let below = |n: u64| bound(n).is_some_and(|b| b < eps);
    if below(start) {
        return Some(start);
    }
    let mut lo = start;
    let mut hi = start.max(1);
    loop {
        hi = hi.checked_mul(2)?;
        if below(hi) {
            break;
        }
        lo = hi;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if below(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Runs the sector test on `seq` for the opening `alpha` and segment `d`.
pub fn sector_test(seq: &PointSequence, alpha: f64, d: f64) -> Result<SectorReport> {
    if !(alpha > 0.0 && alpha <= PI / 2.0) {
        return Err(Error::param("alpha", "must lie in (0, π/2]"));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::param("d", "must be positive"));
    }
    let epsilon = 0.5 * d * alpha.sin().powi(2) * EPSILON_FACTOR;
    let terms: Vec<f64> = seq.points().iter().map(|p| p.recip().im.abs()).collect();
    let stored_sum: f64 = terms.iter().sum();
    let mut notes = Vec::new();

    let mut report = SectorReport {
        alpha,
        d,
        verdict: VerdictClass::Inconclusive,
        angle_condition: false,
        offending_index: None,
        stored_sum,
        tail_bound: None,
        epsilon,
        tail_index: None,
        notes: Vec::new(),
    };

    if let Some(i) = seq.points().iter().position(|&p| !in_sector(p, alpha)) {
        report.offending_index = Some(i + 1);
        notes.push(format!("stored point {} lies outside the sector", i + 1));
        report.notes = notes;
        return Ok(report);
    }

    let (tail_bound, generator) = if seq.is_finite() {
        (Some(0.0), None)
    } else {
        match seq.tail() {
            None => {
                notes.push("no generator: the tail of Σ|Im 1/λ| cannot be bounded".into());
                (None, None)
            }
            Some(t) => {
                let tail_in_sector = match t.generator {
                    Generator::Sector(p) => p.angle >= alpha - ANGLE_TOL,
                    _ => false,
                };
                if !tail_in_sector {
                    notes.push("generated tail leaves the sector".into());
                    report.notes = notes;
                    return Ok(report);
                }
                let bound = t.abs_im_inv();
                if bound.is_none() {
                    notes.push("Σ|Im 1/λ| diverges along the generator".into());
                }
                (bound, Some(*t))
            }
        }
    };
    report.angle_condition = true;
    report.tail_bound = tail_bound;

    let Some(tail) = tail_bound else {
        report.notes = notes;
        return Ok(report);
    };

    let suffix = suffix_sums(&terms, tail);
    let n = terms.len() as u64;
    report.tail_index = match suffix.iter().position(|&s| s < epsilon) {
        Some(k) => Some(k as u64),
        None => generator.and_then(|t| first_below(n, epsilon, |m| t.generator.abs_im_inv_tail(m))),
    };
    report.verdict = VerdictClass::IncompleteAllD;
    notes.push(format!(
        "Σ|Im 1/λ| ≤ {:.6e}; finitely many points moved per the shift invariance reach ε = {:.6e}",
        stored_sum + tail,
        epsilon
    ));
    report.notes = notes;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelBound {
    /// `(Pφ)(λ)`.
    pub lhs: f64,
    /// `|Im(1/λ)|·∫φ / (π sin²α)`.
    pub rhs: f64,
    pub quadrature_error: f64,
    pub holds: bool,
}

/// Checks `(Pφ)(λ) ≤ |Im(1/λ)|·∫φ / (π sin²α)` at one sector point.
pub fn kernel_bound_check(
    lambda: ComplexPoint,
    alpha: f64,
    phi: &TestFunction,
    cfg: &QuadratureConfig,
) -> Result<KernelBound> {
    if !(alpha > 0.0 && alpha <= PI / 2.0) {
        return Err(Error::param("alpha", "must lie in (0, π/2]"));
    }
    if lambda.is_zero() || !lambda.is_finite() {
        return Err(Error::param("lambda", "must be finite and nonzero"));
    }
    if !in_sector(lambda, alpha) {
        return Err(Error::param("lambda", "lies outside the sector α ≤ |arg λ| ≤ π - α"));
    }
    let p = poisson(phi, lambda, cfg)?;
    let mass = integral_of(phi, cfg);
    let factor = lambda.recip().im.abs() / (PI * alpha.sin().powi(2));
    let rhs = factor * mass.value;
    let quadrature_error = p.abs_error + factor * mass.abs_error;
    Ok(KernelBound {
        lhs: p.value,
        rhs,
        quadrature_error,
        holds: p.value <= rhs + quadrature_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{SectorParams, SequenceSpec};
    use crate::testfn::Shape;

    fn sector(exponent: f64, count: u64) -> PointSequence {
        SequenceSpec::Sector {
            params: SectorParams {
                angle: PI / 4.0,
                exponent,
                scale: 1.0,
                alternate: false,
            },
            count,
        }
        .generate()
        .unwrap()
    }

    fn plateau() -> TestFunction {
        TestFunction::new(Shape::Plateau {
            height: 1.0,
            a: 1.0,
            b: 2.0,
            w: 0.1,
            mirrored: true,
        })
        .unwrap()
    }

    #[test]
    fn quadratic_sector_fires() {
        let rep = sector_test(&sector(2.0, 100), PI / 4.0, 1.0).unwrap();
        assert!(rep.fired());
        // (1/√2)·π²/6 ≈ 1.1632
        let total = rep.stored_sum + rep.tail_bound.unwrap();
        assert!(total > 1.163 && total < 1.17, "{total}");
    }

    #[test]
    fn linear_sector_is_inconclusive() {
        let rep = sector_test(&sector(1.0, 100), PI / 4.0, 1.0).unwrap();
        assert_eq!(rep.verdict, VerdictClass::Inconclusive);
        assert!(rep.angle_condition);
    }

    #[test]
    fn real_points_fail_the_angle() {
        let seq = PointSequence::explicit(vec![ComplexPoint::real(1.0), ComplexPoint::real(2.0)]).unwrap();
        let rep = sector_test(&seq, PI / 4.0, 1.0).unwrap();
        assert_eq!(rep.verdict, VerdictClass::Inconclusive);
        assert_eq!(rep.offending_index, Some(1));
    }

    #[test]
    fn tail_index_beyond_stored_points() {
        // Tiny d forces K past the truncation; the generator bound decides it.
        let rep = sector_test(&sector(2.0, 10), PI / 4.0, 1e-4).unwrap();
        let k = rep.tail_index.unwrap();
        assert!(k > 10);
        let q = sector(2.0, 10).tail().unwrap().generator;
        assert!(q.abs_im_inv_tail(k).unwrap() < rep.epsilon);
        assert!(q.abs_im_inv_tail(k - 1).unwrap() >= rep.epsilon);
    }

    #[test]
    fn kernel_bound_examples() {
        let kb = kernel_bound_check(ComplexPoint::new(0.0, 1.0), PI / 2.0, &plateau(), &QuadratureConfig::default())
            .unwrap();
        assert!(kb.holds && kb.lhs > 0.0);
        let edge = ComplexPoint::from_polar(3.0, PI / 6.0);
        let kb = kernel_bound_check(edge, PI / 6.0, &plateau(), &QuadratureConfig::default()).unwrap();
        assert!(kb.holds);
        let zero = kernel_bound_check(edge, PI / 6.0, &TestFunction::zero(), &QuadratureConfig::default()).unwrap();
        assert_eq!((zero.lhs, zero.rhs), (0.0, 0.0));
        assert!(zero.holds);
        assert!(kernel_bound_check(ComplexPoint::real(2.0), 0.1, &plateau(), &QuadratureConfig::default()).is_err());
    }

    #[test]
    fn first_below_finds_threshold() {
        assert_eq!(first_below(5, 0.1, |n| Some(1.0 / n as f64)), Some(11));
        assert_eq!(first_below(20, 0.1, |n| Some(1.0 / n as f64)), Some(20));
        assert_eq!(first_below(1, 0.1, |_| None), None);
    }
}
