//! Concrete syntax and the `pss` command line.

pub mod commands;
pub mod syntax;

pub use commands::{run, Cli, Command, Outcome, Report};
pub use syntax::{parse, parse_term, Goal, ParseError, SourceFile};
