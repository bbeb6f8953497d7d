//! Run configuration: one JSON document shared by every subcommand.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use expcomplete_core::criteria::Assignment;
use expcomplete_core::sequences::{normalize_shift, ComplexPoint, PointSequence, SequenceSpec};
use expcomplete_core::testfn::{family_member, FamilySpec, Shape, TestFunction};
use expcomplete_core::{QuadratureConfig, SearchOptions, TypeParameter};

use crate::Failure;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceSpec>,
    /// 1-based indices of points to move before anything else runs.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub shifts: BTreeMap<usize, ComplexPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    /// Test function given as a family member.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    /// Test function given as a raw shape.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Shape>,
    /// Declared support radius for `shape`; defaults to its true extent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_radius: Option<f64>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    /// Real evaluation points for `hilbert`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x: Vec<f64>,
    /// Complex evaluation points for `poisson`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub z: Vec<ComplexPoint>,
    /// Refuse to evaluate the functional for non-members.
    #[serde(default = "yes")]
    pub require_membership: bool,
    #[serde(default)]
    pub criteria: CriteriaConfig,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub seed: u64,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sector: Option<SectorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bm_series: Option<BmSeriesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bm_radius: Option<BmRadiusConfig>,
    /// Include a scale sweep of `family` as functional evidence.
    #[serde(default)]
    pub sweep: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorConfig {
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BmSeriesConfig {
    pub c: f64,
    #[serde(default = "greedy")]
    pub assignment: Assignment,
}

fn greedy() -> Assignment {
    Assignment::GreedyNearestDistinct
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BmRadiusConfig {
    pub c_lo: f64,
    pub c_hi: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub budget: usize,
    pub restarts: usize,
    pub radius_cap: f64,
    pub radii: Vec<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        let d = SearchOptions::default();
        Self {
            budget: d.budget,
            restarts: d.restarts,
            radius_cap: d.radius_cap,
            radii: Vec::new(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub sigma: Option<f64>,
    pub d: Option<f64>,
    pub seed: Option<u64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_depth: Option<u32>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            Failure::Validation(format!(
                "{}:{}:{}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.sigma.is_some() || o.d.is_some() {
            self.sigma = o.sigma;
            self.d = o.d;
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(v) = o.rel_tol {
            self.quadrature.rel_tol = v;
        }
        if let Some(v) = o.abs_tol {
            self.quadrature.abs_tol = v;
        }
        if let Some(v) = o.max_depth {
            self.quadrature.max_refinement_depth = v;
        }
    }

    /// Checks everything that does not depend on the subcommand.
    pub fn validate(&self) -> Result<(), Failure> {
        if self.schema != SCHEMA_VERSION {
            return Err(Failure::Validation(format!(
                "schema: expected {SCHEMA_VERSION}, found {}",
                self.schema
            )));
        }
        if self.sigma.is_some() && self.d.is_some() {
            return Err(Failure::Validation("give exactly one of sigma and d".into()));
        }
        if self.family.is_some() && self.shape.is_some() {
            return Err(Failure::Validation("give at most one of family and shape".into()));
        }
        if self.support_radius.is_some() && self.shape.is_none() {
            return Err(Failure::Validation("support_radius applies to shape only".into()));
        }
        self.quadrature.validate()?;
        if let Some(t) = self.type_parameter_opt()? {
            t.validate()?;
        }
        if self.sequence.is_some() {
            self.sequence()?;
        }
        if self.family.is_some() || self.shape.is_some() {
            self.function()?;
        }
        Ok(())
    }

    fn type_parameter_opt(&self) -> Result<Option<TypeParameter>, Failure> {
        Ok(match (self.sigma, self.d) {
            (Some(s), None) => Some(TypeParameter::sigma(s)?),
            (None, Some(d)) => Some(TypeParameter::segment(d)?),
            _ => None,
        })
    }

    pub fn type_parameter(&self) -> Result<TypeParameter, Failure> {
        self.type_parameter_opt()?
            .ok_or_else(|| Failure::Validation("sigma or d is required".into()))
    }

    pub fn sequence(&self) -> Result<PointSequence, Failure> {
        let spec = self
            .sequence
            .as_ref()
            .ok_or_else(|| Failure::Validation("sequence is required".into()))?;
        let raw = spec.generate_raw()?;
        Ok(normalize_shift(raw, &self.shifts)?)
    }

    pub fn function(&self) -> Result<TestFunction, Failure> {
        match (&self.family, &self.shape) {
            (Some(f), None) => Ok(family_member(f)?),
            (None, Some(s)) => Ok(match self.support_radius {
                Some(r) => TestFunction::with_declared_radius(s.clone(), r)?,
                None => TestFunction::new(s.clone())?,
            }),
            _ => Err(Failure::Validation("a test function (family or shape) is required".into())),
        }
    }

    pub fn family(&self) -> Result<&FamilySpec, Failure> {
        self.family
            .as_ref()
            .ok_or_else(|| Failure::Validation("family is required".into()))
    }

    pub fn search_options(&self) -> Result<SearchOptions, Failure> {
        let o = SearchOptions {
            budget: self.search.budget,
            restarts: self.search.restarts,
            seed: self.seed,
            radius_cap: self.search.radius_cap,
            quadrature: self.quadrature,
        };
        o.validate()?;
        Ok(o)
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quadrature
    }
}
