//! Validated exact arithmetic for presentations of `L^p[0,1]`, the Lamperti
//! sigma disjointness functional, partial-disintegration extension, staged
//! disintegration synthesis, and isometry lifting between presentations.
//!
//! All numeric results are rational intervals; no floating point is used
//! anywhere on the certified paths.

pub mod num;
pub mod interval;
pub mod enclosure;
pub mod dyadic;
pub mod stepfn;
pub mod node;
pub mod presentation;
pub mod sigma;
pub mod lattice;
pub mod synth;
pub mod isometry;

pub use crate::enclosure::{Enclosure, Exponent};
pub use crate::interval::Interval;
pub use crate::num::{ComplexRational, Rational};

use thiserror::Error;

/// Errors shared across the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("exponent could not be certified different from 2")]
    PEqualsTwo,
    #[error("negative input where a nonnegative interval was required")]
    NegativeInput,
    #[error("search budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("modulus violation: certified step bound {bound} exceeds 2^-{n}")]
    ModulusViolation { n: u32, bound: String },
    #[error("domain shape error: {0}")]
    DomainShape(String),
    #[error("simplicity violation: {0}")]
    SimplicityViolation(String),
    #[error("zero-norm value at a level-1 node")]
    ZeroNorm,
    #[error("root norm differs from 1 beyond tolerance")]
    RootNorm,
    #[error("chain violation between stages: {0}")]
    ChainViolation(String),
    #[error("isomorphism certification failed: {0}")]
    IsoCertification(String),
    #[error("exponent mismatch between presentations")]
    ExponentMismatch,
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
