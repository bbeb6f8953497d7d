//! Poisson integral, principal-value Hilbert transform and the derivative
//! `(-Hφ)'` of a test function.
//!
//! All integrals over the real line are cut to `[-R_φ, R_φ]`, where the test
//! function vanishes identically, plus closed-form tails where the integrand
//! is not `φ` itself.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{Integral, QuadratureConfig, QuadratureResult, Status};
use crate::sequences::ComplexPoint;
use crate::testfn::TestFunction;

/// Poisson integral of `φ` at `z`.
///
/// On the real axis the boundary convention `(Pφ)(x) = φ(x)` applies and the
/// result is exact. `z = 0` is refused.
pub fn poisson(phi: &TestFunction, z: ComplexPoint, cfg: &QuadratureConfig) -> Result<QuadratureResult> {
    if !z.is_finite() {
        return Err(Error::param("z", "must be finite"));
    }
    if z.is_zero() {
        return Err(Error::EvaluationAtOrigin);
    }
    if z.im == 0.0 {
        return Ok(QuadratureResult::exact(phi.eval(z.re)));
    }
    if phi.is_zero() {
        return Ok(QuadratureResult::exact(0.0));
    }
    let (a, y) = (z.re, z.im.abs());
    let r = phi.support_radius;
    let integrand = |t: f64| {
        let d = t - a;
        y / (d * d + y * y) * phi.eval(t)
    };
    let mut breaks = phi.special_points();
    breaks.push(a);
    for k in [1.0, 4.0, 16.0, 64.0] {
        breaks.extend([a - k * y, a + k * y]);
    }
    let mut integral = Integral::new();
    integral.add(-r, r, &integrand, &breaks, &phi.graded_points());
    Ok(integral.integrate(cfg).scaled(1.0 / PI))
}

/// Description of a real function for the principal-value integrator.
struct Profile<'a> {
    f: &'a (dyn Fn(f64) -> f64 + Sync),
    lo: f64,
    hi: f64,
    special: Vec<f64>,
    graded: Vec<f64>,
    /// `f` has an odd `1/t` pole at the origin, taken in the principal-value
    /// sense by pairing `t` with `-t`.
    pole_at_origin: bool,
}

impl Profile<'_> {
    fn distance_to_special(&self, x: f64) -> f64 {
        self.special
            .iter()
            .map(|&p| (p - x).abs())
            .filter(|&d| d > 0.0)
            .fold(f64::INFINITY, f64::min)
    }
}

fn window(cfg: &QuadratureConfig, dist: f64) -> f64 {
    let auto = 0.5 * dist.min(0.1);
    match cfg.pv_window {
        Some(w) => w.min(auto),
        None => auto,
    }
}

/// Subintervals of `[lo, hi]` left after removing the open `holes`.
fn complement(lo: f64, hi: f64, holes: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut holes = holes.to_vec();
    holes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    let mut cursor = lo;
    for (a, b) in holes {
        if a > cursor {
            out.push((cursor, a.min(hi)));
        }
        cursor = cursor.max(b);
        if cursor >= hi {
            break;
        }
    }
    if cursor < hi {
        out.push((cursor, hi));
    }
    out.retain(|(a, b)| b > a);
    out
}

/// `(1/π) PV ∫ f(t)/(x - t) dt` by symmetric pairing around `x` (and around
/// the origin when `f` has a pole there).
fn pv_hilbert(p: &Profile<'_>, x: f64, cfg: &QuadratureConfig) -> QuadratureResult {
    let delta = window(cfg, p.distance_to_special(x));
    let f = p.f;

    // (f(x-s) - f(x+s))/s is bounded for Lipschitz f.
    let paired = |s: f64| (f(x - s) - f(x + s)) / s;
    let origin_paired = |s: f64| f(s) / (x - s) + f(-s) / (x + s);
    let outer = |t: f64| f(t) / (x - t);

    let mut holes = vec![(x - delta, x + delta)];
    let mut integral = Integral::new();
    integral.add(0.0, delta, &paired, &[], &[]);
    if p.pole_at_origin {
        let rho = 0.5 * (x.abs() * 0.5).min(p.distance_to_special(0.0)).min(0.1);
        integral.add(0.0, rho, &origin_paired, &[], &[]);
        holes.push((-rho, rho));
    }
    for (a, b) in complement(p.lo, p.hi, &holes) {
        integral.add(a, b, &outer, &p.special, &p.graded);
    }
    integral.integrate(cfg).scaled(1.0 / PI)
}

fn profile_of<'a>(phi: &'a TestFunction, f: &'a (dyn Fn(f64) -> f64 + Sync), pole: bool) -> Profile<'a> {
    let r = phi.support_radius;
    Profile {
        f,
        lo: -r,
        hi: r,
        special: phi.special_points(),
        graded: phi.graded_points(),
        pole_at_origin: pole,
    }
}

/// Local regularity of `φ` at `x` seen through finite differences.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Regularity {
    Smooth,
    /// One-sided derivatives differ by `jump`.
    Kink { jump: f64 },
    Discontinuous,
}

fn probe_regularity(phi: &TestFunction, x: f64, scale: f64) -> Regularity {
    let h1 = 1e-3 * scale;
    let h2 = 1e-4 * scale;
    let fx = phi.eval(x);
    let (p1, m1) = (phi.eval(x + h1), phi.eval(x - h1));
    let (p2, m2) = (phi.eval(x + h2), phi.eval(x - h2));
    if ![fx, p1, m1, p2, m2].iter().all(|v| v.is_finite()) {
        return Regularity::Discontinuous;
    }
    let magnitude = fx.abs() + phi.derivative(x).abs() * scale + 1e-300;
    let jump1 = (p1 - m1).abs();
    let jump2 = (p2 - m2).abs();
    if jump2 > 1e-6 * magnitude && jump2 > 0.5 * jump1 {
        return Regularity::Discontinuous;
    }
    let second1 = (p1 + m1 - 2.0 * fx) / h1;
    let second2 = (p2 + m2 - 2.0 * fx) / h2;
    if second2.abs() * scale > 1e-6 * magnitude && second2.abs() > 0.5 * second1.abs() {
        return Regularity::Kink { jump: second2 };
    }
    Regularity::Smooth
}

fn regularity_scale(phi: &TestFunction, x: f64) -> f64 {
    let d = phi
        .special_points()
        .iter()
        .map(|&p| (p - x).abs())
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    d.min(1.0)
}

/// Direct Hilbert transform `(Hφ)(x) = (1/π) PV ∫ φ(t)/(x - t) dt`.
pub fn hilbert(phi: &TestFunction, x: f64, cfg: &QuadratureConfig) -> Result<QuadratureResult> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::param("x", "must be finite and nonzero"));
    }
    if phi.is_zero() {
        return Ok(QuadratureResult::exact(0.0));
    }
    if probe_regularity(phi, x, regularity_scale(phi, x)) == Regularity::Discontinuous {
        return Ok(QuadratureResult {
            value: f64::NAN,
            abs_error: f64::INFINITY,
            status: Status::SingularFailure,
            evaluations: 5,
        });
    }
    let f = |t: f64| phi.eval(t);
    Ok(pv_hilbert(&profile_of(phi, &f, false), x, cfg))
}

/// Inverse transform; differs from [`hilbert`] only by sign.
pub fn hilbert_inverse(phi: &TestFunction, x: f64, cfg: &QuadratureConfig) -> Result<QuadratureResult> {
    hilbert(phi, x, cfg).map(QuadratureResult::negated)
}

/// `(-Hφ)'(x)` computed by two independent quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HilbertDerivative {
    pub x: f64,
    /// Symmetric second-difference form; its error includes the cross-form
    /// discrepancy.
    pub result: QuadratureResult,
    pub symmetric: QuadratureResult,
    pub difference_quotient: QuadratureResult,
    #[serde(with = "crate::nonfinite")]
    pub discrepancy: f64,
}

impl HilbertDerivative {
    /// True when the two forms agree within the sum of their own error
    /// estimates.
    pub fn forms_agree(&self) -> bool {
        match (self.symmetric.status, self.difference_quotient.status) {
            (Status::Divergent, Status::Divergent) => {
                self.symmetric.value.signum() == self.difference_quotient.value.signum()
            }
            _ => self.discrepancy <= self.symmetric.abs_error + self.difference_quotient.abs_error,
        }
    }
}

/// `(-Hφ)'(x) = (1/π) PV ∫ (φ(t) - φ(x))/(t - x)² dt`, evaluated both in
/// that form and as `(1/π) ∫_0^∞ (φ(x+t) + φ(x-t) - 2φ(x))/t² dt`.
///
/// At a kink of `φ` the integral diverges with the sign of the derivative
/// jump; both forms then report [`Status::Divergent`].
pub fn hilbert_derivative(phi: &TestFunction, x: f64, cfg: &QuadratureConfig) -> Result<HilbertDerivative> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::param("x", "must be finite and nonzero"));
    }
    if phi.is_zero() {
        let zero = QuadratureResult::exact(0.0);
        return Ok(HilbertDerivative {
            x,
            result: zero,
            symmetric: zero,
            difference_quotient: zero,
            discrepancy: 0.0,
        });
    }
    if phi.in_zero_set(x) {
        return Err(Error::param("x", "lies in the zero set of φ"));
    }

    match probe_regularity(phi, x, regularity_scale(phi, x)) {
        Regularity::Smooth => {}
        Regularity::Kink { jump } => {
            let diverged = QuadratureResult {
                value: jump.signum() * f64::INFINITY,
                abs_error: 0.0,
                status: Status::Divergent,
                evaluations: 5,
            };
            return Ok(HilbertDerivative {
                x,
                result: diverged,
                symmetric: diverged,
                difference_quotient: diverged,
                discrepancy: 0.0,
            });
        }
        Regularity::Discontinuous => {
            let failed = QuadratureResult {
                value: f64::NAN,
                abs_error: f64::INFINITY,
                status: Status::SingularFailure,
                evaluations: 5,
            };
            return Ok(HilbertDerivative {
                x,
                result: failed,
                symmetric: failed,
                difference_quotient: failed,
                discrepancy: f64::NAN,
            });
        }
    }

    // Each form gets a quarter of the budget so that the combined error,
    // discrepancy included, still meets the requested tolerance.
    let part_cfg = cfg.tightened(0.25);
    let symmetric = symmetric_form(phi, x, &part_cfg);
    let difference_quotient = difference_quotient_form(phi, x, &part_cfg);

    let discrepancy = (symmetric.value - difference_quotient.value).abs();
    let combined = symmetric.abs_error + difference_quotient.abs_error;
    let mut result = symmetric;
    result.abs_error = symmetric.abs_error + discrepancy;
    result.evaluations += difference_quotient.evaluations;
    result.status = symmetric.status.max(difference_quotient.status);
    if result.status == Status::Converged && result.abs_error > cfg.target(result.value) {
        result.status = Status::MaxRefinement;
    }
    if discrepancy > 10.0 * combined && discrepancy > cfg.target(symmetric.value) {
        result.status = Status::SingularFailure;
    }
    Ok(HilbertDerivative {
        x,
        result,
        symmetric,
        difference_quotient,
        discrepancy,
    })
}

fn symmetric_form(phi: &TestFunction, x: f64, cfg: &QuadratureConfig) -> QuadratureResult {
    let r = phi.support_radius;
    let fx = phi.eval(x);
    let reach = (r - x).max(x + r);
    let kernel = |t: f64| (phi.eval(x + t) + phi.eval(x - t) - 2.0 * fx) / (t * t);
    let breaks: Vec<f64> = phi.special_points().iter().map(|&p| (p - x).abs()).collect();
    let graded: Vec<f64> = phi.graded_points().iter().map(|&g| (g - x).abs()).collect();
    let mut integral = Integral::new();
    integral.add(0.0, reach, &kernel, &breaks, &graded);
    // Beyond `reach` both φ(x±t) vanish: ∫_reach^∞ -2φ(x)/t² dt.
    integral.integrate(cfg).shifted(-2.0 * fx / reach).scaled(1.0 / PI)
}

fn difference_quotient_form(phi: &TestFunction, x: f64, cfg: &QuadratureConfig) -> QuadratureResult {
    let r = phi.support_radius;
    let fx = phi.eval(x);
    let slope = phi.derivative(x);
    let special = phi.special_points();
    let dist = special
        .iter()
        .map(|&p| (p - x).abs())
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let delta = window(cfg, dist);

    // Inside the window the linear term integrates to zero by symmetry and is
    // subtracted; what remains is bounded.
    let inner = |t: f64| {
        let d = t - x;
        (phi.eval(t) - fx - slope * d) / (d * d)
    };
    let outer = |t: f64| {
        let d = t - x;
        (phi.eval(t) - fx) / (d * d)
    };
    let mut integral = Integral::new();
    integral.add(x - delta, x + delta, &inner, &[x], &[]);
    for (a, b) in complement(-r, r, &[(x - delta, x + delta)]) {
        integral.add(a, b, &outer, &special, &phi.graded_points());
    }
    // Outside [-R, R]: ∫ -φ(x)/(t-x)² dt over both tails.
    let tails = -fx * (1.0 / (r - x) + 1.0 / (x + r));
    integral.integrate(cfg).shifted(tails).scaled(1.0 / PI)
}

/// Both sides of `d/dx(-Hφ) = -H(φ')` at `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutationReport {
    pub x: f64,
    pub step: f64,
    /// Central difference of `-Hφ` with step `step`.
    pub lhs: f64,
    /// `-H(φ')(x)`.
    pub rhs: f64,
    pub discrepancy: f64,
    /// Quadrature error propagated into `lhs` and `rhs`.
    pub quadrature_error: f64,
    pub status: Status,
}

/// Measures how well differentiation commutes with the Hilbert transform at
/// `x`, differentiating numerically on the left and transforming the
/// analytic derivative on the right. The discrepancy is `O(step²)` plus
/// quadrature noise of order `tol/step`.
pub fn commutation_check(
    phi: &TestFunction,
    x: f64,
    step: f64,
    cfg: &QuadratureConfig,
) -> Result<CommutationReport> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::param("step", "must be positive"));
    }
    if x == 0.0 || (x.abs() <= step) {
        return Err(Error::param("x", "must stay away from the origin by more than the step"));
    }
    if phi.is_zero() {
        return Ok(CommutationReport {
            x,
            step,
            lhs: 0.0,
            rhs: 0.0,
            discrepancy: 0.0,
            quadrature_error: 0.0,
            status: Status::Converged,
        });
    }
    let right = hilbert(phi, x + step, cfg)?;
    let left = hilbert(phi, x - step, cfg)?;
    let lhs = -(right.value - left.value) / (2.0 * step);

    let derivative = |t: f64| phi.derivative(t);
    let profile = profile_of(phi, &derivative, phi.singular_at_origin());
    let rhs_result = pv_hilbert(&profile, x, cfg).negated();

    let status = right.status.max(left.status).max(rhs_result.status);
    let quadrature_error = (right.abs_error + left.abs_error) / (2.0 * step) + rhs_result.abs_error;
    Ok(CommutationReport {
        x,
        step,
        lhs,
        rhs: rhs_result.value,
        discrepancy: (lhs - rhs_result.value).abs(),
        quadrature_error,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::{family_member, FamilySpec, LogPeakParams, Shape};

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn plateau(a: f64, b: f64, w: f64, mirrored: bool) -> TestFunction {
        TestFunction::new(Shape::Plateau {
            height: 1.0,
            a,
            b,
            w,
            mirrored,
        })
        .unwrap()
    }

    fn tent(left: f64, peak: f64, right: f64) -> TestFunction {
        TestFunction::new(Shape::Tent {
            left,
            peak,
            right,
            height: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn poisson_of_zero() {
        let r = poisson(&TestFunction::zero(), ComplexPoint::new(0.0, 1.0), &cfg()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn poisson_boundary_convention_is_exact() {
        let f = plateau(1.0, 3.0, 0.5, true);
        let r = poisson(&f, ComplexPoint::real(2.0), &cfg()).unwrap();
        assert_eq!(r.value, f.eval(2.0));
        assert_eq!(r.abs_error, 0.0);
        let edge = poisson(&f, ComplexPoint::real(1.2), &cfg()).unwrap();
        assert_eq!(edge.value, f.eval(1.2));
    }

    #[test]
    fn poisson_refuses_origin() {
        let f = plateau(1.0, 3.0, 0.5, true);
        assert_eq!(
            poisson(&f, ComplexPoint::real(0.0), &cfg()).unwrap_err(),
            Error::EvaluationAtOrigin
        );
    }

    #[test]
    fn poisson_of_narrow_plateau_matches_arctan() {
        // Plateau ≈ 1 on [-1, 1]: (1/π)(arctan(1 - a)/y + arctan(1 + a)/y) → 1/2 at z = i.
        for w in [1e-2, 1e-3] {
            let f = plateau(-1.0, 1.0, w, false);
            let r = poisson(&f, ComplexPoint::new(0.0, 1.0), &cfg()).unwrap();
            assert!(r.is_converged());
            assert!((r.value - 0.5).abs() < w, "w={w}: {}", r.value);
        }
    }

    #[test]
    fn poisson_is_conjugation_symmetric() {
        let f = TestFunction::log_peak(2.0).unwrap();
        let z = ComplexPoint::new(0.7, 0.3);
        let up = poisson(&f, z, &cfg()).unwrap();
        let down = poisson(&f, z.conj(), &cfg()).unwrap();
        assert_eq!(up.value, down.value);
    }

    #[test]
    fn hilbert_of_indicator_limit() {
        // H(1_[0,1])(2) = (1/π) ln 2.
        let exact = 2f64.ln() / PI;
        for (w, tol) in [(1e-2, 5e-3), (1e-3, 5e-4)] {
            let f = plateau(0.0, 1.0, w, false);
            let r = hilbert(&f, 2.0, &cfg()).unwrap();
            assert!((r.value - exact).abs() < tol, "w={w}: {} vs {exact}", r.value);
        }
    }

    #[test]
    fn hilbert_inside_support_matches_indicator_formula() {
        // At x inside [a, b]: (1/π) ln|(x-a)/(x-b)|.
        let f = plateau(1.0, 3.0, 1e-3, false);
        let x: f64 = 2.5;
        let exact = ((x - 1.0) / (3.0 - x)).ln() / PI;
        let r = hilbert(&f, x, &cfg()).unwrap();
        assert!((r.value - exact).abs() < 1e-3, "{} vs {exact}", r.value);
    }

    #[test]
    fn hilbert_of_even_function_is_odd() {
        let f = plateau(0.5, 2.0, 0.2, true);
        for x in [0.3, 1.0, 1.7, 2.5] {
            let p = hilbert(&f, x, &cfg()).unwrap();
            let m = hilbert(&f, -x, &cfg()).unwrap();
            assert!((p.value + m.value).abs() <= p.abs_error + m.abs_error + 1e-12);
            assert!(p.value != 0.0);
        }
    }

    #[test]
    fn inverse_is_negated() {
        let f = plateau(0.0, 1.0, 1e-2, false);
        let h = hilbert(&f, 2.0, &cfg()).unwrap();
        let hi = hilbert_inverse(&f, 2.0, &cfg()).unwrap();
        assert_eq!(hi.value, -h.value);
        assert_eq!(hilbert_inverse(&TestFunction::zero(), 1.0, &cfg()).unwrap().value, 0.0);
    }

    #[test]
    fn hilbert_rejects_origin() {
        assert!(hilbert(&TestFunction::zero(), 0.0, &cfg()).is_err());
    }

    #[test]
    fn hilbert_derivative_of_log_peak_matches_closed_form() {
        // (-Hφ_r)'(x) = ln((r + |x|)/(r - |x|)) / (π|x|) for φ_r = log⁺(r/|x|).
        for r in [1.0, 3.0] {
            let f = TestFunction::log_peak(r).unwrap();
            for x in [0.05 * r, 0.5 * r, -0.3 * r, 0.9 * r] {
                let ax: f64 = x.abs();
                let exact = ((r + ax) / (r - ax)).ln() / (PI * ax);
                let d = hilbert_derivative(&f, x, &cfg()).unwrap();
                assert!(d.forms_agree(), "{d:?}");
                assert!(
                    (d.result.value - exact).abs() < 1e-6 * exact.max(1.0),
                    "r={r} x={x}: {} vs {exact}",
                    d.result.value
                );
            }
        }
    }

    #[test]
    fn hilbert_derivative_at_tent_peak_diverges_negatively() {
        let f = tent(2.0, 3.0, 4.0);
        let d = hilbert_derivative(&f, 3.0, &cfg()).unwrap();
        assert_eq!(d.result.status, Status::Divergent);
        assert!(d.result.value < 0.0);
    }

    #[test]
    fn hilbert_derivative_of_zero() {
        let d = hilbert_derivative(&TestFunction::zero(), 1.0, &cfg()).unwrap();
        assert_eq!(d.result.value, 0.0);
    }

    #[test]
    fn plateau_top_has_negative_derivative() {
        let f = plateau(1.0, 2.0, 0.1, true);
        let d = hilbert_derivative(&f, 1.5, &cfg()).unwrap();
        assert!(d.forms_agree());
        assert!(d.result.value < 0.0);
    }

    #[test]
    fn commutation_of_zero() {
        let c = commutation_check(&TestFunction::zero(), 1.0, 1e-3, &cfg()).unwrap();
        assert_eq!(c.discrepancy, 0.0);
    }

    #[test]
    fn commutation_on_plateau() {
        let f = plateau(1.0, 2.0, 0.4, true);
        let tight = QuadratureConfig {
            rel_tol: 1e-13,
            abs_tol: 1e-14,
            ..Default::default()
        };
        let c = commutation_check(&f, 1.5, 1e-3, &tight).unwrap();
        assert!(c.discrepancy < 1e-4, "{c:?}");
    }

    #[test]
    fn commutation_on_log_peak_is_second_order() {
        let f = family_member(&FamilySpec::LogPeak(LogPeakParams { r: 1.0, height: 1.0 })).unwrap();
        let tight = QuadratureConfig {
            rel_tol: 1e-13,
            abs_tol: 1e-14,
            ..Default::default()
        };
        let coarse = commutation_check(&f, 0.5, 0.02, &tight).unwrap();
        let fine = commutation_check(&f, 0.5, 0.01, &tight).unwrap();
        let ratio = coarse.discrepancy / fine.discrepancy;
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}: {coarse:?} {fine:?}");
    }

    #[test]
    fn complement_removes_holes() {
        let c = complement(-2.0, 2.0, &[(0.5, 1.0), (-1.0, -0.5)]);
        assert_eq!(c, vec![(-2.0, -1.0), (-0.5, 0.5), (1.0, 2.0)]);
        assert_eq!(complement(0.0, 1.0, &[(-1.0, 2.0)]), vec![]);
    }
}
