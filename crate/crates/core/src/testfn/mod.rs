//! Candidate test functions and membership in the admissible class.
//!
//! A [`TestFunction`] is a closed-form [`Shape`] together with the metadata
//! the class is defined through: the declared support radius, the declared
//! smoothness, and the declared zero set. Membership is checked numerically
//! in [`membership`].

pub mod membership;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use membership::{
    check_conjugate_positivity, check_finiteness, check_semi_normalization, default_positivity_grid,
    default_probe_scales, verify_membership, Check, DomainReport, FinitenessReport, MembershipReport,
    PositivityReport, PositivitySample, SemiNormalizationReport,
};

/// Declared differentiability class `C^m` on the open set where `φ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Finite(u32),
    Infinite,
}

impl Serialize for Smoothness {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Smoothness::Finite(m) => s.serialize_u32(*m),
            Smoothness::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Smoothness {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u32),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(m) => Ok(Smoothness::Finite(m)),
            Raw::Text(t) if t == "inf" => Ok(Smoothness::Infinite),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("unknown smoothness `{t}`"))),
        }
    }
}

impl fmt::Display for Smoothness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothness::Finite(m) => write!(f, "C^{m}"),
            Smoothness::Infinite => f.write_str("C^inf"),
        }
    }
}

/// A closed interval `[lo, hi]`; ends may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "crate::nonfinite")]
    pub lo: f64,
    #[serde(with = "crate::nonfinite")]
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// `u ↦ e^{-1/u}·[u > 0]`, the building block of the smooth step.
fn flat(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

fn flat_prime(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp() / (u * u)
    } else {
        0.0
    }
}

/// C^∞ step from 0 at `u ≤ 0` to 1 at `u ≥ 1`, with `S(u) + S(1-u) = 1`.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = flat(u);
        a / (a + flat(1.0 - u))
    }
}

fn smooth_step_prime(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        let a = flat(u);
        let b = flat(1.0 - u);
        let den = a + b;
        (flat_prime(u) * b + a * flat_prime(1.0 - u)) / (den * den)
    }
}

/// Closed-form profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Zero,
    /// `height·log⁺(r/|x|)`.
    LogPeak { r: f64, height: f64 },
    /// Smooth plateau of `height` on `[a+w, b-w]`, rising on `[a, a+w]` and
    /// falling on `[b-w, b]`; `mirrored` reflects it to `[-b, -a]` as well.
    Plateau {
        height: f64,
        a: f64,
        b: f64,
        w: f64,
        mirrored: bool,
    },
    /// Piecewise-linear hat with apex `(peak, height)` on `[left, right]`.
    Tent {
        left: f64,
        peak: f64,
        right: f64,
        height: f64,
    },
    /// `height·exp(1 - 1/(1-u²))` with `u` mapping `[a, b]` onto `[-1, 1]`.
    Bump { a: f64, b: f64, height: f64 },
    /// `height/(1+x²)`; not compactly supported.
    Cauchy { height: f64 },
    /// `base((x - shift)/scale)`.
    Scaled {
        base: Box<Shape>,
        scale: f64,
        shift: f64,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, "must be a positive finite number"))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, "must be finite"))
    }
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        match self {
            Shape::Zero => Ok(()),
            Shape::LogPeak { r, height } => {
                positive("r", *r)?;
                positive("height", *height)
            }
            Shape::Plateau {
                height,
                a,
                b,
                w,
                mirrored,
            } => {
                positive("height", *height)?;
                finite("a", *a)?;
                finite("b", *b)?;
                positive("w", *w)?;
                if a >= b {
                    return Err(Error::param("a", "inner radius must be below the outer radius"));
                }
                if 2.0 * w > b - a {
                    return Err(Error::param("w", "mollification width exceeds half the plateau"));
                }
                if *mirrored && *a < 0.0 {
                    return Err(Error::param("a", "mirrored plateau needs a ≥ 0"));
                }
                Ok(())
            }
            Shape::Tent {
                left,
                peak,
                right,
                height,
            } => {
                finite("left", *left)?;
                finite("right", *right)?;
                positive("height", *height)?;
                if !(left < peak && peak < right) {
                    return Err(Error::param("peak", "must lie strictly between left and right"));
                }
                Ok(())
            }
            Shape::Bump { a, b, height } => {
                finite("a", *a)?;
                finite("b", *b)?;
                positive("height", *height)?;
                if a >= b {
                    return Err(Error::param("a", "must be below b"));
                }
                Ok(())
            }
            Shape::Cauchy { height } => positive("height", *height),
            Shape::Scaled { base, scale, shift } => {
                positive("scale", *scale)?;
                finite("shift", *shift)?;
                base.validate()
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Shape::Zero => 0.0,
            Shape::LogPeak { r, height } => {
                let ax = x.abs();
                if ax >= *r {
                    0.0
                } else if ax == 0.0 {
                    f64::INFINITY
                } else {
                    height * (r / ax).ln()
                }
            }
            Shape::Plateau {
                height,
                a,
                b,
                w,
                mirrored,
            } => {
                let t = if *mirrored { x.abs() } else { x };
                if t <= *a || t >= *b {
                    0.0
                } else if t < a + w {
                    height * smooth_step((t - a) / w)
                } else if t > b - w {
                    height * smooth_step((b - t) / w)
                } else {
                    *height
                }
            }
            Shape::Tent {
                left,
                peak,
                right,
                height,
            } => {
                if x <= *left || x >= *right {
                    0.0
                } else if x <= *peak {
                    height * (x - left) / (peak - left)
                } else {
                    height * (right - x) / (right - peak)
                }
            }
            Shape::Bump { a, b, height } => {
                let u = (2.0 * x - a - b) / (b - a);
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    height * (1.0 - 1.0 / (1.0 - u * u)).exp()
                }
            }
            Shape::Cauchy { height } => height / (1.0 + x * x),
            Shape::Scaled { base, scale, shift } => base.eval((x - shift) / scale),
        }
    }

    /// Derivative where it exists; one-sided limits are averaged at kinks.
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Shape::Zero => 0.0,
            Shape::LogPeak { r, height } => {
                if x.abs() >= *r {
                    0.0
                } else {
                    -height / x
                }
            }
            Shape::Plateau {
                height,
                a,
                b,
                w,
                mirrored,
            } => {
                let (t, sign) = if *mirrored { (x.abs(), x.signum()) } else { (x, 1.0) };
                let d = if t <= *a || t >= *b {
                    0.0
                } else if t < a + w {
                    height * smooth_step_prime((t - a) / w) / w
                } else if t > b - w {
                    -height * smooth_step_prime((b - t) / w) / w
                } else {
                    0.0
                };
                sign * d
            }
            Shape::Tent {
                left,
                peak,
                right,
                height,
            } => {
                let up = height / (peak - left);
                let down = -height / (right - peak);
                if x < *left || x > *right {
                    0.0
                } else if x == *left {
                    0.5 * up
                } else if x == *right {
                    0.5 * down
                } else if x < *peak {
                    up
                } else if x > *peak {
                    down
                } else {
                    0.5 * (up + down)
                }
            }
            Shape::Bump { a, b, height } => {
                let u = (2.0 * x - a - b) / (b - a);
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    let s = 1.0 - u * u;
                    let value = height * (1.0 - 1.0 / s).exp();
                    value * (-2.0 * u / (s * s)) * (2.0 / (b - a))
                }
            }
            Shape::Cauchy { height } => -2.0 * height * x / (1.0 + x * x).powi(2),
            Shape::Scaled { base, scale, shift } => base.derivative((x - shift) / scale) / scale,
        }
    }

    /// Points where the profile or its derivative is not smooth, including
    /// the ends of the support.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Shape::Zero | Shape::Cauchy { .. } => vec![],
            Shape::LogPeak { r, .. } => vec![-r, *r],
            Shape::Plateau {
                a, b, w, mirrored, ..
            } => {
                let pts = [*a, a + w, b - w, *b];
                if *mirrored {
                    pts.iter().flat_map(|&p| [p, -p]).collect()
                } else {
                    pts.to_vec()
                }
            }
            Shape::Tent {
                left, peak, right, ..
            } => vec![*left, *peak, *right],
            Shape::Bump { a, b, .. } => vec![*a, *b],
            Shape::Scaled { base, scale, shift } => {
                base.breakpoints().into_iter().map(|p| shift + scale * p).collect()
            }
        }
    }

    /// Points where the profile is unbounded (integrable singularities).
    pub fn singular_points(&self) -> Vec<f64> {
        match self {
            Shape::LogPeak { .. } => vec![0.0],
            Shape::Scaled { base, scale, shift } => {
                base.singular_points().into_iter().map(|p| shift + scale * p).collect()
            }
            _ => vec![],
        }
    }

    /// Interior maxima worth sampling explicitly.
    pub fn critical_points(&self) -> Vec<f64> {
        match self {
            Shape::Tent { peak, .. } => vec![*peak],
            Shape::Bump { a, b, .. } => vec![0.5 * (a + b)],
            Shape::Plateau {
                a, b, mirrored, ..
            } => {
                let mid = 0.5 * (a + b);
                if *mirrored {
                    vec![mid, -mid]
                } else {
                    vec![mid]
                }
            }
            Shape::Scaled { base, scale, shift } => {
                base.critical_points().into_iter().map(|p| shift + scale * p).collect()
            }
            _ => vec![],
        }
    }

    /// Open intervals on which the profile is positive, before removing 0.
    fn positive_intervals(&self) -> Vec<(f64, f64)> {
        match self {
            Shape::Zero => vec![],
            Shape::LogPeak { r, .. } => vec![(-r, *r)],
            Shape::Plateau {
                a, b, mirrored, ..
            } => {
                if *mirrored {
                    vec![(-b, -a), (*a, *b)]
                } else {
                    vec![(*a, *b)]
                }
            }
            Shape::Tent { left, right, .. } => vec![(*left, *right)],
            Shape::Bump { a, b, .. } => vec![(*a, *b)],
            Shape::Cauchy { .. } => vec![(f64::NEG_INFINITY, f64::INFINITY)],
            Shape::Scaled { base, scale, shift } => base
                .positive_intervals()
                .into_iter()
                .map(|(lo, hi)| (shift + scale * lo, shift + scale * hi))
                .collect(),
        }
    }

    /// Smallest `R` with `φ(x) = 0` for `|x| ≥ R`; infinite when not compactly
    /// supported, zero for the zero function.
    pub fn support_extent(&self) -> f64 {
        self.positive_intervals()
            .iter()
            .map(|&(lo, hi)| lo.abs().max(hi.abs()))
            .fold(0.0, f64::max)
    }

    pub fn smoothness(&self) -> Smoothness {
        match self {
            Shape::Tent { .. } => Smoothness::Finite(0),
            Shape::Scaled { base, .. } => base.smoothness(),
            _ => Smoothness::Infinite,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Shape::Zero)
    }
}

/// `φ = h·log⁺(r/|x|)`; `height` defaults to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogPeakParams {
    pub r: f64,
    #[serde(default = "one")]
    pub height: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateauParams {
    pub h: f64,
    pub a: f64,
    pub b: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledTranslateParams {
    pub base: Box<FamilySpec>,
    pub scale: f64,
    #[serde(default)]
    pub shift: f64,
}

/// Parametrized families searched for large functional values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum FamilySpec {
    LogPeak(LogPeakParams),
    MollifiedPlateau(PlateauParams),
    ScaledTranslate(ScaledTranslateParams),
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::LogPeak(_) => "log_peak",
            FamilySpec::MollifiedPlateau(_) => "mollified_plateau",
            FamilySpec::ScaledTranslate(_) => "scaled_translate",
        }
    }

    pub fn shape(&self) -> Result<Shape> {
        let shape = match self {
            FamilySpec::LogPeak(p) => Shape::LogPeak {
                r: p.r,
                height: p.height,
            },
            FamilySpec::MollifiedPlateau(p) => Shape::Plateau {
                height: p.h,
                a: p.a,
                b: p.b,
                w: p.w,
                mirrored: true,
            },
            FamilySpec::ScaledTranslate(p) => Shape::Scaled {
                base: Box::new(p.base.shape()?),
                scale: p.scale,
                shift: p.shift,
            },
        };
        shape.validate()?;
        Ok(shape)
    }
}

/// Builds the family member described by `spec`. Membership in the class is
/// not implied; run [`verify_membership`] on the result.
pub fn family_member(spec: &FamilySpec) -> Result<TestFunction> {
    let mut f = TestFunction::new(spec.shape()?)?;
    f.family = Some(spec.clone());
    Ok(f)
}

/// A candidate test function with its declared class metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub shape: Shape,
    /// Declared `R_φ`: the function must vanish for `|x| ≥ R_φ`.
    pub support_radius: f64,
    pub smoothness: Smoothness,
    /// Declared zero set inside `ℝ∖{0}`.
    pub zero_set: Vec<Interval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
}

impl TestFunction {
    /// Declares `R_φ` as the true support extent of `shape` (1 for the zero
    /// function).
    pub fn new(shape: Shape) -> Result<Self> {
        shape.validate()?;
        let extent = shape.support_extent();
        if !extent.is_finite() {
            return Err(Error::param(
                "support_radius",
                "shape is not compactly supported; declare a radius explicitly",
            ));
        }
        let radius = if extent > 0.0 { extent } else { 1.0 };
        Self::with_declared_radius(shape, radius)
    }

    /// Uses a caller-declared `R_φ`, which the finiteness check then tests.
    pub fn with_declared_radius(shape: Shape, support_radius: f64) -> Result<Self> {
        shape.validate()?;
        if !(support_radius > 0.0 && support_radius.is_finite()) {
            return Err(Error::param("support_radius", "must be a positive finite number"));
        }
        let zero_set = zero_set_from_components(&components_of(&shape));
        Ok(Self {
            smoothness: shape.smoothness(),
            shape,
            support_radius,
            zero_set,
            family: None,
        })
    }

    pub fn zero() -> Self {
        Self::new(Shape::Zero).expect("zero function is valid")
    }

    pub fn log_peak(r: f64) -> Result<Self> {
        family_member(&FamilySpec::LogPeak(LogPeakParams { r, height: 1.0 }))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.shape.eval(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.shape.derivative(x)
    }

    /// Open intervals of `ℝ∖{0}` where `φ > 0`, i.e. the connected components
    /// of `ℝ∖({0} ∪ Z_φ)`.
    pub fn components(&self) -> Vec<(f64, f64)> {
        components_of(&self.shape)
    }

    pub fn in_zero_set(&self, x: f64) -> bool {
        self.zero_set.iter().any(|iv| iv.contains(x))
    }

    pub fn is_zero(&self) -> bool {
        self.shape.is_zero()
    }

    /// Points the integrators must not straddle: kinks, support ends, the
    /// origin and the singular points.
    pub(crate) fn special_points(&self) -> Vec<f64> {
        let r = self.support_radius;
        let mut pts = self.shape.breakpoints();
        pts.extend(self.shape.singular_points());
        pts.extend([0.0, -r, r]);
        pts.retain(|p| p.is_finite());
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    pub(crate) fn graded_points(&self) -> Vec<f64> {
        self.shape.singular_points()
    }

    pub(crate) fn singular_at_origin(&self) -> bool {
        self.shape.singular_points().contains(&0.0)
    }
}

fn components_of(shape: &Shape) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (lo, hi) in shape.positive_intervals() {
        if lo < 0.0 && hi > 0.0 {
            out.push((lo, 0.0));
            out.push((0.0, hi));
        } else {
            out.push((lo, hi));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn zero_set_from_components(components: &[(f64, f64)]) -> Vec<Interval> {
    // Complement of the components inside ℝ∖{0}; the origin is excluded from
    // the domain, not part of Z_φ.
    let mut zs = Vec::new();
    let mut cursor = f64::NEG_INFINITY;
    for &(lo, hi) in components {
        if lo > cursor {
            zs.push(Interval { lo: cursor, hi: lo });
        }
        cursor = cursor.max(hi);
    }
    if cursor < f64::INFINITY {
        zs.push(Interval {
            lo: cursor,
            hi: f64::INFINITY,
        });
    }
    zs.into_iter()
        .filter(|iv| !(iv.lo == 0.0 && iv.hi == 0.0))
        .collect()
}
