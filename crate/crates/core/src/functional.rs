//! The completeness functional `Σ_k (Pφ)(λ_k) - (σ/π)∫φ`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, pairwise_sum, QuadratureConfig, QuadratureResult, Status};
use crate::sequences::{ComplexPoint, PointSequence};
use crate::testfn::TestFunction;
use crate::transforms::poisson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeKind {
    /// Exponential type `σ` of a Bernstein space.
    BernsteinSigma,
    /// Length `d` of the segment `I_d`.
    SegmentD,
}

/// `σ` or `d`, with `σ = d/2`. All density conversions go through here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeParameter {
    pub kind: TypeKind,
    pub value: f64,
}

impl TypeParameter {
    pub fn sigma(sigma: f64) -> Result<Self> {
        Self::new(TypeKind::BernsteinSigma, sigma)
    }

    pub fn segment(d: f64) -> Result<Self> {
        Self::new(TypeKind::SegmentD, d)
    }

    pub fn new(kind: TypeKind, value: f64) -> Result<Self> {
        let t = Self { kind, value };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.value > 0.0 && self.value.is_finite() {
            Ok(())
        } else {
            Err(Error::param("type_parameter", "must be a positive finite number"))
        }
    }

    pub fn sigma_value(&self) -> f64 {
        match self.kind {
            TypeKind::BernsteinSigma => self.value,
            TypeKind::SegmentD => 0.5 * self.value,
        }
    }

    pub fn d_value(&self) -> f64 {
        2.0 * self.sigma_value()
    }

    /// Weight of `∫φ` in the functional: `σ/π = d/(2π)`.
    pub fn density(&self) -> f64 {
        self.sigma_value() / PI
    }
}

/// `∫φ` over `[-R_φ, R_φ]`, graded toward integrable singularities.
pub fn integral_of(phi: &TestFunction, cfg: &QuadratureConfig) -> QuadratureResult {
    if phi.is_zero() {
        return QuadratureResult::exact(0.0);
    }
    let r = phi.support_radius;
    let f = |t: f64| phi.eval(t);
    integrate(&f, -r, r, &phi.special_points(), &phi.graded_points(), cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonTerm {
    pub lambda: ComplexPoint,
    pub value: f64,
    pub abs_error: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub type_parameter: TypeParameter,
    pub density: f64,
    pub sum_poisson: f64,
    pub integral: QuadratureResult,
    /// `density·∫φ`.
    pub integral_term: f64,
    /// `sum_poisson - integral_term`.
    pub value: f64,
    pub per_term: Vec<PoissonTerm>,
    /// Bound on the Poisson terms of the points beyond the stored truncation;
    /// `None` when no bound is available.
    #[serde(with = "crate::nonfinite::option")]
    pub truncation_bound: Option<f64>,
    /// Accumulated quadrature error of `value`.
    pub quadrature_error: f64,
    /// Worst status over all quadratures.
    pub status: Status,
}

impl FunctionalReport {
    pub fn truncation_known(&self) -> bool {
        self.truncation_bound.is_some()
    }
}

/// Evaluates the functional for one test function.
///
/// Membership of `φ` is the caller's responsibility. Real points contribute
/// `φ(λ)` exactly. The omitted tail is bounded through
/// `(Pφ)(λ) ≤ (1/π)·|Im λ|/(|λ| - R_φ)²·∫φ`, i.e.
/// `(1/π)(m/(m - R_φ))²·|Im(1/λ)|·∫φ` for `|λ| ≥ m > R_φ`.
pub fn evaluate(
    seq: &PointSequence,
    t: &TypeParameter,
    phi: &TestFunction,
    cfg: &QuadratureConfig,
) -> Result<FunctionalReport> {
    t.validate()?;
    cfg.validate()?;

    let per_term = seq
        .points()
        .par_iter()
        .map(|&lambda| {
            poisson(phi, lambda, cfg).map(|q| PoissonTerm {
                lambda,
                value: q.value,
                abs_error: q.abs_error,
                status: q.status,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let values: Vec<f64> = per_term.iter().map(|p| p.value).collect();
    let errors: Vec<f64> = per_term.iter().map(|p| p.abs_error).collect();
    let sum_poisson = pairwise_sum(&values);
    let integral = integral_of(phi, cfg);
    let density = t.density();
    let integral_term = density * integral.value;

    let status = per_term
        .iter()
        .map(|p| p.status)
        .chain([integral.status])
        .max()
        .unwrap_or(Status::Converged);

    Ok(FunctionalReport {
        type_parameter: *t,
        density,
        sum_poisson,
        integral,
        integral_term,
        value: sum_poisson - integral_term,
        truncation_bound: truncation_bound(seq, phi, integral.value),
        quadrature_error: pairwise_sum(&errors) + density * integral.abs_error,
        status,
        per_term,
    })
}

fn truncation_bound(seq: &PointSequence, phi: &TestFunction, mass: f64) -> Option<f64> {
    if seq.is_finite() || phi.is_zero() {
        return Some(0.0);
    }
    let tail = seq.tail()?;
    let r = phi.support_radius;
    let m = tail.min_modulus()?;
    if tail.generator.is_real() {
        // Real points beyond the support contribute φ(λ) = 0 exactly.
        return (m >= r).then_some(0.0);
    }
    if m <= r {
        return None;
    }
    let im_tail = tail.abs_im_inv()?;
    let ratio = m / (m - r);
    Some(mass / PI * ratio * ratio * im_tail)
}
