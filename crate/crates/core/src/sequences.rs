//! Point sequences, their generators, and the counting measure.
//!
//! An infinite sequence is stored as a finite prefix plus the generator that
//! produced it. Everything downstream that needs the omitted tail asks the
//! generator for closed-form bounds instead of summing more points.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct ComplexPoint {
    pub re: f64,
    pub im: f64,
}

impl From<[f64; 2]> for ComplexPoint {
    fn from([re, im]: [f64; 2]) -> Self {
        Self { re, im }
    }
}

impl From<ComplexPoint> for [f64; 2] {
    fn from(p: ComplexPoint) -> Self {
        [p.re, p.im]
    }
}

impl ComplexPoint {
    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub const fn real(re: f64) -> Self {
        Self { re, im: 0.0 }
    }

    pub fn from_polar(modulus: f64, arg: f64) -> Self {
        Self {
            re: modulus * arg.cos(),
            im: modulus * arg.sin(),
        }
    }

    pub fn modulus(self) -> f64 {
        self.re.hypot(self.im)
    }

    /// Argument in `(-π, π]`.
    pub fn arg(self) -> f64 {
        self.im.atan2(self.re)
    }

    pub fn conj(self) -> Self {
        Self {
            re: self.re,
            im: -self.im,
        }
    }

    pub fn recip(self) -> Self {
        // Smith's algorithm keeps the intermediate products in range.
        if self.re.abs() >= self.im.abs() {
            let r = self.im / self.re;
            let den = self.re + self.im * r;
            Self::new(1.0 / den, -r / den)
        } else {
            let r = self.re / self.im;
            let den = self.re * r + self.im;
            Self::new(r / den, -1.0 / den)
        }
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn is_zero(self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    pub fn is_real(self) -> bool {
        self.im == 0.0
    }

    pub fn distance(self, other: Self) -> f64 {
        (self.re - other.re).hypot(self.im - other.im)
    }
}

fn default_one() -> f64 {
    1.0
}
fn default_two() -> f64 {
    2.0
}
fn default_start() -> u64 {
    1
}

/// `offset + step·(k-1)`, optionally mirrored to `±` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArithmeticParams {
    #[serde(default = "default_one")]
    pub step: f64,
    #[serde(default = "default_one")]
    pub offset: f64,
    #[serde(default)]
    pub two_sided: bool,
}

/// `step·m + amplitude·(-1)^m / m^power` for `m = start, start+1, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbedParams {
    #[serde(default = "default_one")]
    pub step: f64,
    #[serde(default = "default_one")]
    pub amplitude: f64,
    #[serde(default = "default_two")]
    pub power: f64,
    #[serde(default = "default_start")]
    pub start: u64,
    #[serde(default)]
    pub two_sided: bool,
}

/// `scale·base^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LacunaryParams {
    pub base: f64,
    #[serde(default = "default_one")]
    pub scale: f64,
}

/// `scale·k^exponent·e^{i·angle}`; with `alternate`, even indices are
/// conjugated into the lower half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorParams {
    pub angle: f64,
    #[serde(default = "default_two")]
    pub exponent: f64,
    #[serde(default = "default_one")]
    pub scale: f64,
    #[serde(default)]
    pub alternate: bool,
}

/// Closed-form generator for `λ_k`, `k = 1, 2, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Generator {
    Arithmetic(ArithmeticParams),
    PerturbedIntegers(PerturbedParams),
    Lacunary(LacunaryParams),
    Sector(SectorParams),
}

fn finite_param(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, "must be finite"))
    }
}

/// For two-sided generators, index `k` maps to magnitude index `j` and a sign.
fn two_sided_index(k: u64) -> (u64, f64) {
    (k.div_ceil(2), if k % 2 == 1 { 1.0 } else { -1.0 })
}

impl Generator {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Generator::Arithmetic(p) => {
                finite_param("step", p.step)?;
                finite_param("offset", p.offset)?;
                if p.step == 0.0 {
                    return Err(Error::param("step", "must be nonzero (points would accumulate)"));
                }
            }
            Generator::PerturbedIntegers(p) => {
                finite_param("step", p.step)?;
                finite_param("amplitude", p.amplitude)?;
                finite_param("power", p.power)?;
                if p.step == 0.0 {
                    return Err(Error::param("step", "must be nonzero"));
                }
                if p.power < 0.0 {
                    return Err(Error::param("power", "must be nonnegative"));
                }
                if p.start == 0 {
                    return Err(Error::param("start", "must be at least 1"));
                }
            }
            Generator::Lacunary(p) => {
                finite_param("base", p.base)?;
                finite_param("scale", p.scale)?;
                if p.base <= 1.0 {
                    return Err(Error::param("base", "must exceed 1"));
                }
                if p.scale == 0.0 {
                    return Err(Error::param("scale", "must be nonzero"));
                }
            }
            Generator::Sector(p) => {
                finite_param("angle", p.angle)?;
                finite_param("exponent", p.exponent)?;
                finite_param("scale", p.scale)?;
                if !(p.angle > 0.0 && p.angle <= PI / 2.0) {
                    return Err(Error::param("angle", "must lie in (0, π/2]"));
                }
                if p.exponent <= 0.0 {
                    return Err(Error::param("exponent", "must be positive"));
                }
                if p.scale <= 0.0 {
                    return Err(Error::param("scale", "must be positive"));
                }
            }
        }
        // No finite limit point: the modulus must grow along sampled indices.
        let samples = [10u64, 100, 1_000, 10_000, 100_000, 1_000_000];
        let moduli: Vec<f64> = samples.iter().map(|&k| self.point(k).modulus()).collect();
        if !moduli.windows(2).all(|w| w[1] > w[0] || w[1] == f64::INFINITY) {
            return Err(Error::param(
                "kind",
                "generator modulus does not grow along the sequence (finite limit point)",
            ));
        }
        Ok(())
    }

    /// The `k`-th generated point, `k ≥ 1`.
    pub fn point(&self, k: u64) -> ComplexPoint {
        match *self {
            Generator::Arithmetic(p) => {
                if p.two_sided {
                    let (j, sign) = two_sided_index(k);
                    ComplexPoint::real(sign * (p.offset + p.step * (j - 1) as f64))
                } else {
                    ComplexPoint::real(p.offset + p.step * (k - 1) as f64)
                }
            }
            Generator::PerturbedIntegers(p) => {
                let (j, sign) = if p.two_sided { two_sided_index(k) } else { (k, 1.0) };
                let m = p.start + j - 1;
                let alternating = if m % 2 == 0 { 1.0 } else { -1.0 };
                let mf = m as f64;
                ComplexPoint::real(sign * (p.step * mf + p.amplitude * alternating / mf.powf(p.power)))
            }
            Generator::Lacunary(p) => ComplexPoint::real(p.scale * p.base.powf(k as f64)),
            Generator::Sector(p) => {
                let modulus = p.scale * (k as f64).powf(p.exponent);
                let z = ComplexPoint::from_polar(modulus, p.angle);
                if p.alternate && k.is_multiple_of(2) {
                    z.conj()
                } else {
                    z
                }
            }
        }
    }

    pub fn is_real(&self) -> bool {
        !matches!(self, Generator::Sector(_))
    }

    /// Lower bound on `|λ_k|` over all `k > n`, when one is available.
    pub fn min_modulus_beyond(&self, n: u64) -> Option<f64> {
        let bound = match *self {
            Generator::Arithmetic(p) => {
                let j = if p.two_sided { (n + 2) / 2 } else { n + 1 };
                let first = p.offset + p.step * (j - 1) as f64;
                // Monotone in |·| once the progression has the sign of its step.
                if first * p.step > 0.0 {
                    first.abs()
                } else {
                    return None;
                }
            }
            Generator::PerturbedIntegers(p) => {
                let j = if p.two_sided { (n + 2) / 2 } else { n + 1 };
                let m = (p.start + j - 1) as f64;
                p.step.abs() * m - p.amplitude.abs() / m.powf(p.power)
            }
            Generator::Lacunary(p) => p.scale.abs() * p.base.powf((n + 1) as f64),
            Generator::Sector(p) => p.scale * ((n + 1) as f64).powf(p.exponent),
        };
        (bound > 0.0).then_some(bound)
    }

    /// Upper bound on `Σ_{k>n} |Im(1/λ_k)|`; `None` when the series diverges.
    pub fn abs_im_inv_tail(&self, n: u64) -> Option<f64> {
        match *self {
            Generator::Sector(p) => {
                if p.exponent <= 1.0 {
                    return None;
                }
                let q = p.exponent;
                // Σ_{k>n} k^{-q} ≤ ∫_n^∞ t^{-q} dt, and for n = 0 add the k = 1 term.
                let zeta_tail = if n == 0 {
                    1.0 + 1.0 / (q - 1.0)
                } else {
                    (n as f64).powf(1.0 - q) / (q - 1.0)
                };
                Some(p.angle.sin() / p.scale * zeta_tail)
            }
            _ => Some(0.0),
        }
    }
}

/// Generator plus the number of its points already materialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailDescriptor {
    pub generator: Generator,
    pub generated: u64,
}

impl TailDescriptor {
    pub fn min_modulus(&self) -> Option<f64> {
        self.generator.min_modulus_beyond(self.generated)
    }

    pub fn abs_im_inv(&self) -> Option<f64> {
        self.generator.abs_im_inv_tail(self.generated)
    }
}

/// Input description of a sequence, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceSpec {
    Arithmetic { params: ArithmeticParams, count: u64 },
    PerturbedIntegers { params: PerturbedParams, count: u64 },
    Lacunary { params: LacunaryParams, count: u64 },
    Sector { params: SectorParams, count: u64 },
    Explicit {
        points: Vec<ComplexPoint>,
        /// The listed points are the whole sequence.
        #[serde(default)]
        finite: bool,
    },
}

impl SequenceSpec {
    fn generator(&self) -> Option<(Generator, u64)> {
        match *self {
            SequenceSpec::Arithmetic { params, count } => Some((Generator::Arithmetic(params), count)),
            SequenceSpec::PerturbedIntegers { params, count } => {
                Some((Generator::PerturbedIntegers(params), count))
            }
            SequenceSpec::Lacunary { params, count } => Some((Generator::Lacunary(params), count)),
            SequenceSpec::Sector { params, count } => Some((Generator::Sector(params), count)),
            SequenceSpec::Explicit { .. } => None,
        }
    }

    /// Materializes the points without rejecting the origin, for use with
    /// [`normalize_shift`].
    pub fn generate_raw(&self) -> Result<RawSequence> {
        match self {
            SequenceSpec::Explicit { points, finite } => Ok(RawSequence {
                points: points.clone(),
                tail: None,
                finite: *finite,
            }),
            _ => {
                let (generator, count) = self.generator().expect("generator kinds handled");
                if count == 0 {
                    return Err(Error::param("count", "must be at least 1"));
                }
                generator.validate()?;
                let points = (1..=count).map(|k| generator.point(k)).collect();
                Ok(RawSequence {
                    points,
                    tail: Some(TailDescriptor {
                        generator,
                        generated: count,
                    }),
                    finite: false,
                })
            }
        }
    }

    pub fn generate(&self) -> Result<PointSequence> {
        self.generate_raw()?.into_sequence()
    }
}

/// Points in generation order, not yet checked against the sequence
/// invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSequence {
    pub points: Vec<ComplexPoint>,
    pub tail: Option<TailDescriptor>,
    pub finite: bool,
}

impl RawSequence {
    pub fn into_sequence(self) -> Result<PointSequence> {
        PointSequence::build(self.points, self.tail, self.finite, Vec::new())
    }
}

/// A validated truncation `λ_1..λ_N` of a sequence without limit points.
///
/// Points are sorted by modulus, ties by argument, and never include the
/// origin. Multiplicities are repeated points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSequence {
    points: Vec<ComplexPoint>,
    tail: Option<TailDescriptor>,
    finite: bool,
    shifted_indices: Vec<usize>,
}

impl PointSequence {
    fn build(
        mut points: Vec<ComplexPoint>,
        tail: Option<TailDescriptor>,
        finite: bool,
        shifted_indices: Vec<usize>,
    ) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinitePoint { index: i + 1 });
            }
            if p.is_zero() {
                return Err(Error::ZeroPoint { index: i + 1 });
            }
        }
        if let Some(t) = &tail {
            t.generator.validate()?;
        }
        points.sort_by(|a, b| {
            a.modulus()
                .total_cmp(&b.modulus())
                .then(a.arg().total_cmp(&b.arg()))
        });
        Ok(Self {
            points,
            tail,
            finite: finite && tail.is_none(),
            shifted_indices,
        })
    }

    /// A finite sequence given by its points.
    pub fn explicit(points: Vec<ComplexPoint>) -> Result<Self> {
        Self::build(points, None, true, Vec::new())
    }

    pub fn points(&self) -> &[ComplexPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn tail(&self) -> Option<&TailDescriptor> {
        self.tail.as_ref()
    }

    /// True when the stored points are the entire sequence.
    pub fn is_finite(&self) -> bool {
        self.finite
    }

    /// 1-based stored indices replaced by [`normalize_shift`]. Moving finitely
    /// many points leaves zero-subsequence and completeness properties
    /// unchanged, so verdicts computed on the shifted sequence apply to the
    /// original one.
    pub fn shifted_indices(&self) -> &[usize] {
        &self.shifted_indices
    }

    pub fn min_modulus(&self) -> Option<f64> {
        self.points.first().map(|p| p.modulus())
    }

    pub fn counting_measure(&self) -> CountingMeasure<'_> {
        CountingMeasure { backing: self }
    }

    pub fn into_raw(self) -> RawSequence {
        RawSequence {
            points: self.points,
            tail: self.tail,
            finite: self.finite,
        }
    }

    /// Replaces every point by its conjugate.
    pub fn conjugated(&self) -> Self {
        let points = self.points.iter().map(|p| p.conj()).collect();
        Self::build(points, self.tail, self.finite, self.shifted_indices.clone())
            .expect("conjugation preserves the invariants")
    }
}

/// Replaces finitely many points (1-based indices into `raw.points`) and
/// validates the result.
pub fn normalize_shift(
    raw: impl Into<RawSequence>,
    shifts: &BTreeMap<usize, ComplexPoint>,
) -> Result<PointSequence> {
    let mut raw = raw.into();
    for (&index, &target) in shifts {
        if index == 0 || index > raw.points.len() {
            return Err(Error::param(
                "shifts",
                format!("index {index} is outside 1..={}", raw.points.len()),
            ));
        }
        if target.is_zero() {
            return Err(Error::ZeroPoint { index });
        }
        raw.points[index - 1] = target;
    }
    let shifted = shifts.keys().copied().collect();
    PointSequence::build(raw.points, raw.tail, raw.finite, shifted)
}

impl From<PointSequence> for RawSequence {
    fn from(seq: PointSequence) -> Self {
        seq.into_raw()
    }
}

/// A closed region of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    Disk { center: ComplexPoint, radius: f64 },
    Rect { re: [f64; 2], im: [f64; 2] },
    Empty,
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Region::Disk { center, radius } => {
                if !center.is_finite() || !(radius >= 0.0 && radius.is_finite()) {
                    return Err(Error::param("radius", "disk needs a finite center and radius ≥ 0"));
                }
            }
            Region::Rect { re, im } => {
                if !(re[0] <= re[1] && im[0] <= im[1]) {
                    return Err(Error::param("rect", "bounds must satisfy min ≤ max"));
                }
            }
            Region::Empty => {}
        }
        Ok(())
    }

    pub fn contains(&self, z: ComplexPoint) -> bool {
        match *self {
            Region::Disk { center, radius } => z.distance(center) <= radius,
            Region::Rect { re, im } => re[0] <= z.re && z.re <= re[1] && im[0] <= z.im && z.im <= im[1],
            Region::Empty => false,
        }
    }
}

/// `n_Λ(S)`: the number of stored points in `S`, with multiplicity.
#[derive(Debug, Clone, Copy)]
pub struct CountingMeasure<'a> {
    pub backing: &'a PointSequence,
}

impl CountingMeasure<'_> {
    pub fn count_in(&self, region: &Region) -> Result<usize> {
        region.validate()?;
        Ok(self.backing.points.iter().filter(|&&z| region.contains(z)).count())
    }
}
