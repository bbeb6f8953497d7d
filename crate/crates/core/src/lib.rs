//! Numerics for completeness of exponential systems and zero sets of
//! Bernstein-space functions.
//!
//! The crate evaluates the completeness functional
//! `Σ (Pφ)(λ_k) - (σ/π)∫φ` for a point sequence `Λ` and a test function `φ`,
//! checks membership of `φ` in the admissible class, and runs the sector and
//! Beurling–Malliavin sufficient criteria.

pub mod criteria;
pub mod error;
pub mod functional;
pub mod nonfinite;
pub mod quad;
pub mod search;
pub mod sequences;
pub mod testfn;
pub mod transforms;

pub use error::{Error, Result};
pub use quad::{pairwise_sum, QuadratureConfig, QuadratureResult, Status};
pub use sequences::{normalize_shift, ComplexPoint, CountingMeasure, Generator, PointSequence, Region, SequenceSpec};
pub use testfn::{family_member, verify_membership, FamilySpec, MembershipReport, Shape, TestFunction};
pub use transforms::{commutation_check, hilbert, hilbert_derivative, hilbert_inverse, poisson};
pub use criteria::{classify, Verdict, VerdictClass};
pub use functional::{evaluate, integral_of, FunctionalReport, TypeParameter};
pub use search::{maximize, scale_sweep, SearchOptions, SearchTrace, SweepReport, Trend};
