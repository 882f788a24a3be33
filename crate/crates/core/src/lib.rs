//! A higher-order logic-programming engine with assertion checking.
//!
//! Programs are written in `.hopl` files (see the README for the grammar).
//! [`parser::parse_program`] loads one, [`engine::solve`] runs goals, and
//! [`rtcheck::run`] runs them under one of the checking semantics and
//! produces a [`report::Report`].

pub mod assertions;
pub mod builtins;
pub mod corpus;
pub mod engine;
pub mod parser;
pub mod print;
pub mod program;
pub mod report;
pub mod rtcheck;
pub mod span;
pub mod subst;
pub mod term;

pub use engine::{solve, trace, Answer, EngineLimits, EngineOptions, Outcome};
pub use parser::{parse_program, parse_term, ParseError, ParseErrors};
pub use print::print_term;
pub use program::Program;
pub use report::Report;
pub use rtcheck::{run, CheckConfig, ErrorMode, RunOptions, Semantics};
pub use term::{PredKey, Term};
