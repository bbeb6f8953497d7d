//! Derivative-free maximization of the functional over parametrized test
//! function families.
//!
//! Every candidate goes through [`verify_membership`] before it is
//! evaluated; inadmissible candidates are logged but do not count against
//! the evaluation budget. Large values found this way are evidence of an
//! unbounded supremum, never a proof.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{evaluate, TypeParameter};
use crate::quad::{QuadratureConfig, Status};
use crate::sequences::PointSequence;
use crate::testfn::{family_member, verify_membership, FamilySpec, LogPeakParams, PlateauParams, ScaledTranslateParams};

/// Inadmissible candidates allowed per unit of budget before giving up.
const ATTEMPT_FACTOR: usize = 20;

/// Relative simplex diameter at which a restart stops.
const SHRINK_TOL: f64 = 1e-6;

/// Relative spread under which values count as a plateau.
const PLATEAU_TOL: f64 = 1e-3;

/// Log-log slope above which a sweep counts as growing.
const GROWTH_SLOPE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchOptions {
    /// Admissible functional evaluations across all restarts.
    pub budget: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Every candidate vanishes outside `[-radius_cap, radius_cap]`.
    pub radius_cap: f64,
    pub quadrature: QuadratureConfig,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            budget: 60,
            restarts: 3,
            seed: 0,
            radius_cap: 10.0,
            quadrature: QuadratureConfig::default(),
        }
    }
}

impl SearchOptions {
    pub fn validate(&self) -> Result<()> {
        if self.budget < 10 {
            return Err(Error::param("budget", "must be at least 10"));
        }
        if self.restarts == 0 {
            return Err(Error::param("restarts", "must be at least 1"));
        }
        if !(self.radius_cap > 0.0 && self.radius_cap.is_finite()) {
            return Err(Error::param("radius_cap", "must be positive"));
        }
        self.quadrature.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Bounded,
    Growing,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    pub restart: usize,
    pub params: FamilySpec,
    /// Functional value; absent for inadmissible candidates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub membership: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Best {
    pub params: FamilySpec,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub family: String,
    pub radius_cap: f64,
    pub iterates: Vec<Iterate>,
    pub best: Best,
    /// Best value reached by each restart.
    pub restart_bests: Vec<f64>,
    pub trend: Trend,
    pub evaluations: usize,
    pub rejected: usize,
}

fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    (p / (1.0 - p)).ln()
}

/// Unconstrained coordinates of a family member whose support fits in
/// `[-cap, cap]`.
fn encode(spec: &FamilySpec, cap: f64) -> Result<Vec<f64>> {
    Ok(match spec {
        FamilySpec::LogPeak(p) => vec![logit(p.r / cap), logit(p.height)],
        FamilySpec::MollifiedPlateau(p) => {
            let a = p.a.min(cap * (1.0 - 1e-9));
            let b = p.b.min(cap);
            vec![
                logit(a / cap),
                logit((b - a) / (cap - a)),
                logit(2.0 * p.w / (b - a)),
                p.h.ln(),
            ]
        }
        FamilySpec::ScaledTranslate(p) => {
            let r0 = family_member(&p.base)?.support_radius;
            let width = (p.scale * r0).min(cap);
            let room = cap - width;
            let shift = if room > 0.0 { (p.shift / room).clamp(-0.999_999, 0.999_999) } else { 0.0 };
            vec![logit(width / cap), shift.atanh()]
        }
    })
}

fn decode(template: &FamilySpec, u: &[f64], cap: f64) -> Result<FamilySpec> {
    Ok(match template {
        FamilySpec::LogPeak(_) => FamilySpec::LogPeak(LogPeakParams {
            r: cap * sigmoid(u[0]),
            height: sigmoid(u[1]),
        }),
        FamilySpec::MollifiedPlateau(_) => {
            let a = cap * sigmoid(u[0]);
            let b = a + (cap - a) * sigmoid(u[1]);
            FamilySpec::MollifiedPlateau(PlateauParams {
                h: u[3].exp(),
                a,
                b,
                w: 0.5 * (b - a) * sigmoid(u[2]),
            })
        }
        FamilySpec::ScaledTranslate(p) => {
            let r0 = family_member(&p.base)?.support_radius;
            let width = cap * sigmoid(u[0]);
            FamilySpec::ScaledTranslate(ScaledTranslateParams {
                base: p.base.clone(),
                scale: width / r0,
                shift: (cap - width) * u[1].tanh(),
            })
        }
    })
}

type Eval<'a> = &'a (dyn Fn(&[f64]) -> (Iterate, Option<f64>) + Sync);

/// Budgeted objective shared by one restart.
struct Objective<'a> {
    eval: Eval<'a>,
    restart: usize,
    budget: usize,
    used: usize,
    attempts: usize,
    log: Vec<Iterate>,
}

impl Objective<'_> {
    fn exhausted(&self) -> bool {
        self.used >= self.budget || self.attempts >= ATTEMPT_FACTOR * self.budget
    }

    /// Negated value for minimization; `+∞` for inadmissible points.
    fn cost(&mut self, u: &[f64]) -> f64 {
        self.attempts += 1;
        let (mut it, v) = (self.eval)(u);
        it.restart = self.restart;
        self.log.push(it);
        match v {
            Some(v) => {
                self.used += 1;
                -v
            }
            None => f64::INFINITY,
        }
    }
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Nelder–Mead with reflection 1, expansion 2, contraction 1/2, shrink 1/2.
fn nelder_mead(obj: &mut Objective<'_>, x0: &[f64], step: f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let c0 = obj.cost(x0);
    simplex.push((x0.to_vec(), c0));
    for i in 0..n {
        if obj.exhausted() {
            return;
        }
        let mut x = x0.to_vec();
        x[i] += step;
        let c = obj.cost(&x);
        simplex.push((x, c));
    }
    while !obj.exhausted() {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].0.clone();
        let scale = 1.0 + best.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let diameter = simplex
            .iter()
            .map(|(x, _)| x.iter().zip(&best).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if diameter <= SHRINK_TOL * scale {
            return;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let (worst, c_worst) = simplex[n].clone();
        let (c_best, c_second) = (simplex[0].1, simplex[n - 1].1);

        let xr = lerp(&centroid, &worst, -1.0);
        let cr = obj.cost(&xr);
        if cr < c_best {
            if obj.exhausted() {
                simplex[n] = (xr, cr);
                return;
            }
            let xe = lerp(&centroid, &worst, -2.0);
            let ce = obj.cost(&xe);
            simplex[n] = if ce < cr { (xe, ce) } else { (xr, cr) };
        } else if cr < c_second {
            simplex[n] = (xr, cr);
        } else {
            if obj.exhausted() {
                return;
            }
            let (xc, cc) = if cr < c_worst {
                let xc = lerp(&centroid, &xr, 0.5);
                let cc = obj.cost(&xc);
                (xc, cc)
            } else {
                let xc = lerp(&centroid, &worst, 0.5);
                let cc = obj.cost(&xc);
                (xc, cc)
            };
            if cc < cr.min(c_worst) {
                simplex[n] = (xc, cc);
            } else {
                for vertex in simplex.iter_mut().skip(1) {
                    if obj.exhausted() {
                        return;
                    }
                    let x = lerp(&best, &vertex.0, 0.5);
                    let c = obj.cost(&x);
                    *vertex = (x, c);
                }
            }
        }
    }
}

fn restart_seed(seed: u64, restart: usize) -> u64 {
    seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Searches `family` for large functional values, starting from the given
/// member and from randomly perturbed copies of it.
///
/// The trend of a single search is `bounded` when all restarts settle on the
/// same value, `undetermined` otherwise; growth is only judged across
/// support radii by [`scale_sweep`].
pub fn maximize(
    seq: &PointSequence,
    t: &TypeParameter,
    family: &FamilySpec,
    opts: &SearchOptions,
) -> Result<SearchTrace> {
    opts.validate()?;
    t.validate()?;
    let cap = opts.radius_cap;
    let x0 = encode(family, cap)?;
    let cfg = opts.quadrature;

    let eval = |u: &[f64]| -> (Iterate, Option<f64>) {
        let reject = |params: FamilySpec, reason: String| {
            (
                Iterate {
                    restart: 0,
                    params,
                    value: None,
                    membership: false,
                    reason: Some(reason),
                },
                None,
            )
        };
        let params = match decode(family, u, cap) {
            Ok(p) => p,
            Err(e) => return reject(family.clone(), e.to_string()),
        };
        let phi = match family_member(&params) {
            Ok(phi) => phi,
            Err(e) => return reject(params, e.to_string()),
        };
        match verify_membership(&phi, &cfg) {
            Ok(m) if m.overall => {}
            Ok(m) => return reject(params, m.reason.unwrap_or_default()),
            Err(e) => return reject(params, e.to_string()),
        }
        match evaluate(seq, t, &phi, &cfg) {
            Ok(r) if r.status != Status::SingularFailure => (
                Iterate {
                    restart: 0,
                    params,
                    value: Some(r.value),
                    membership: true,
                    reason: None,
                },
                Some(r.value),
            ),
            Ok(_) => reject(params, "quadrature failed in the functional".into()),
            Err(e) => reject(params, e.to_string()),
        }
    };

    let per_restart = opts.budget.div_ceil(opts.restarts);
    let logs: Vec<Vec<Iterate>> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                x0.clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(opts.seed, r));
                x0.iter().map(|v| v + rng.gen_range(-1.5..1.5)).collect()
            };
            let mut obj = Objective {
                eval: &eval,
                restart: r,
                budget: per_restart,
                used: 0,
                attempts: 0,
                log: Vec::new(),
            };
            nelder_mead(&mut obj, &start, 0.5);
            obj.log
        })
        .collect();

    let restart_bests: Vec<f64> = logs
        .iter()
        .map(|log| log.iter().filter_map(|i| i.value).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let iterates: Vec<Iterate> = logs.into_iter().flatten().collect();
    let evaluations = iterates.iter().filter(|i| i.membership).count();
    let rejected = iterates.len() - evaluations;

    let best = iterates
        .iter()
        .filter(|i| i.membership)
        .filter_map(|i| i.value.map(|v| (i, v)))
        .fold(None::<(&Iterate, f64)>, |acc, (i, v)| match acc {
            Some((_, bv)) if bv >= v => acc,
            _ => Some((i, v)),
        })
        .map(|(i, v)| Best {
            params: i.params.clone(),
            value: v,
        })
        .ok_or_else(|| Error::InadmissibleFamily {
            family: family.name().to_string(),
        })?;

    let finite: Vec<f64> = restart_bests.iter().copied().filter(|v| v.is_finite()).collect();
    let spread = finite.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - finite.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let trend = if finite.len() >= 3 && spread <= PLATEAU_TOL * (1.0 + best.value.abs()) {
        Trend::Bounded
    } else {
        Trend::Undetermined
    };

    Ok(SearchTrace {
        family: family.name().to_string(),
        radius_cap: cap,
        iterates,
        best,
        restart_bests,
        trend,
        evaluations,
        rejected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub radius: f64,
    pub best_value: f64,
    pub best_params: FamilySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub family: String,
    pub points: Vec<SweepPoint>,
    pub trend: Trend,
    /// Least-squares slope of `ln v` against `ln r` over the trailing run of
    /// positive best values.
    #[serde(with = "crate::nonfinite::option")]
    pub slope: Option<f64>,
    pub traces: Vec<SearchTrace>,
}

impl SweepReport {
    /// `radius,best_value` rows for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("radius,best_value\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{}", p.radius, p.best_value);
        }
        out
    }
}

fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Trend of best values over increasing radii.
pub fn sweep_trend(points: &[(f64, f64)]) -> (Trend, Option<f64>) {
    let positive: Vec<(f64, f64)> = points
        .iter()
        .rev()
        .take_while(|p| p.1 > 0.0)
        .copied()
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    let slope = (positive.len() >= 3).then(|| loglog_slope(&positive));
    if slope.is_some_and(|s| s >= GROWTH_SLOPE) {
        return (Trend::Growing, slope);
    }
    if points.len() >= 3 {
        let last = &points[points.len() - 3..];
        let hi = last.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let lo = last.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        if hi - lo <= PLATEAU_TOL * (1.0 + hi.abs()) {
            return (Trend::Bounded, slope);
        }
    }
    (Trend::Undetermined, slope)
}

/// Runs [`maximize`] at each support radius, seeding every radius with the
/// best member found so far, so best values are nondecreasing in `r`.
pub fn scale_sweep(
    seq: &PointSequence,
    t: &TypeParameter,
    family: &FamilySpec,
    radii: &[f64],
    opts: &SearchOptions,
) -> Result<SweepReport> {
    if radii.len() < 3 {
        return Err(Error::param("radii", "at least 3 radii are required"));
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("radii", "must be positive and strictly increasing"));
    }
    let mut points: Vec<SweepPoint> = Vec::with_capacity(radii.len());
    let mut traces = Vec::with_capacity(radii.len());
    let mut seed = family.clone();
    for (i, &r) in radii.iter().enumerate() {
        let o = SearchOptions {
            radius_cap: r,
            seed: opts.seed.wrapping_add(i as u64),
            ..*opts
        };
        let trace = maximize(seq, t, &seed, &o)?;
        let mut best = trace.best.clone();
        if let Some(prev) = points.last() {
            if prev.best_value > best.value {
                best = Best {
                    params: prev.best_params.clone(),
                    value: prev.best_value,
                };
            }
        }
        seed = best.params.clone();
        points.push(SweepPoint {
            radius: r,
            best_value: best.value,
            best_params: best.params,
        });
        traces.push(trace);
    }
    let series: Vec<(f64, f64)> = points.iter().map(|p| (p.radius, p.best_value)).collect();
    let (trend, slope) = sweep_trend(&series);
    Ok(SweepReport {
        family: family.name().to_string(),
        points,
        trend,
        slope,
        traces,
    })
}
