//! Enumeration, generation and the property suites that exercise the
//! metatheory on concrete instances.

pub mod enumerate;
pub mod generate;
pub mod suites;

pub use enumerate::{enum_contexts, enum_terms, EnumSpec};
pub use generate::{gen_wf_term, GenConfig, StepWeights};
pub use suites::{check_instance, run_suite, Instance, InstanceResult, SuiteConfig, SuiteReport, SUITES};
