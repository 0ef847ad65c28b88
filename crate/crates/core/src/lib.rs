//! Pure subtype systems: a calculus in which types and terms share one
//! syntax and typing is replaced by subtyping.
//!
//! The crate provides the reduction relations, the subtyping relations with a
//! continuation stack, explicit well-formedness derivations, the practical
//! checking algorithms built on minimal promotion, and a harness that checks
//! the metatheory on enumerated and random instances.

pub mod algo;
pub mod budget;
mod closure;
pub mod context;
pub mod derivation;
pub mod error;
pub mod harness;
pub mod nf;
pub mod reduce;
pub mod steps;
pub mod subtype;
pub mod term;

pub use budget::{Budget, Decision, Verdict};
pub use context::ExtContext;
pub use error::PssError;
pub use nf::{classify_nf, is_nf, NormalFormClass};
pub use steps::StepSet;
pub use term::{CanonKey, Name, Term};
