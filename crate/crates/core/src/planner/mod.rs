//! Planner gateway: a built-in constraint-aware search and a wrapper for
//! external PDDL3 planners.

mod builtin;
mod external;
mod ground;
mod monitor;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{DomainModel, Plan, ProblemModel, Specification};

pub use builtin::{plan_builtin, BuiltinPlanner};
pub use external::{
    parse_planner_output, ExternalPlanner, PlannerOutput, DEFAULT_EXTERNAL_TIMEOUT,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PlanOutcome {
    Solved(Plan),
    Unsolvable,
    Timeout,
}

impl PlanOutcome {
    pub fn plan(&self) -> Option<&Plan> {
        match self {
            PlanOutcome::Solved(p) => Some(p),
            _ => None,
        }
    }

    pub fn into_plan(self) -> Option<Plan> {
        match self {
            PlanOutcome::Solved(p) => Some(p),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PlanOutcome::Solved(_) => "solved",
            PlanOutcome::Unsolvable => "unsolvable",
            PlanOutcome::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerResult {
    pub outcome: PlanOutcome,
    pub wall_time: Duration,
    pub planner_id: String,
}

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("planner process failed: {0}")]
    ProcessFailure(String),
    #[error("could not parse planner output: {0}")]
    ParseFailure(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Anything that turns a problem plus extra constraints into a plan.
///
/// `spec` is conjoined with the problem's own base constraints.
pub trait Planner: Send + Sync {
    fn id(&self) -> &str;

    fn plan(
        &self,
        domain: &DomainModel,
        problem: &ProblemModel,
        spec: &Specification,
    ) -> Result<PlannerResult, PlannerError>;
}

pub(crate) fn all_constraints(problem: &ProblemModel, spec: &Specification) -> Specification {
    problem
        .base_constraints
        .iter()
        .chain(spec.iter())
        .cloned()
        .collect()
}
