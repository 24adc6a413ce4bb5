//! Typed STRIPS with negative preconditions plus a PDDL3 constraints block.
//!
//! Keywords are matched case-insensitively; identifiers keep their case and
//! compare exactly. Every parse either yields a value or a positioned error.

mod ast;
mod parser;
mod render;
pub mod sexpr;

pub use ast::*;
pub(crate) use parser::parse_plan_line;
pub use parser::{
    extract_constraints, parse_constraint, parse_domain, parse_ground_condition, parse_plan,
    parse_problem, parse_specification,
};
pub use render::{
    render_constraint, render_domain, render_plan, render_problem, render_specification,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("semantic error at '{identifier}': {message}")]
    Semantic { identifier: String, message: String },
    #[error("plan line {line}: {message}")]
    PlanLine { line: usize, message: String },
    #[error("plan line {line}: unknown action '{action}'")]
    UnknownAction { line: usize, action: String },
}
