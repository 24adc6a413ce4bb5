//! Plan simulation and exact trajectory-constraint checking.
//!
//! A plan is executed step by step from the initial state; the resulting
//! snapshots are the only states constraints observe (no intra-action
//! states). Each constraint is evaluated by first computing the truth of its
//! condition(s) at every snapshot and then applying the temporal operator.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{
    Atom, Condition, DomainModel, Plan, ProblemModel, Specification, Time, TrajectoryConstraint,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimulateError {
    #[error("step {step}: action {action} is not applicable, failed precondition {failed}")]
    InapplicableAction {
        step: usize,
        action: String,
        failed: String,
    },
    #[error("step {step}: unknown object '{object}'")]
    UnknownObject { step: usize, object: String },
    #[error("step {step}: unknown action '{action}'")]
    UnknownAction { step: usize, action: String },
    #[error("step {step}: {message}")]
    BadArguments { step: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: Time,
    pub state: BTreeSet<Atom>,
}

/// Initial state followed by the state after each plan step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateTrajectory {
    pub snapshots: Vec<Snapshot>,
}

impl StateTrajectory {
    pub fn times(&self) -> Vec<Time> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn final_state(&self) -> &BTreeSet<Atom> {
        &self
            .snapshots
            .last()
            .expect("trajectory always has the initial snapshot")
            .state
    }

    /// Truth of `cond` at every snapshot.
    pub fn truth(&self, cond: &Condition) -> Vec<bool> {
        self.snapshots
            .iter()
            .map(|s| cond.eval(&mut |a| s.state.contains(a)))
            .collect()
    }
}

/// How the single-operand `always-within` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AlwaysWithinReading {
    /// From every snapshot the condition must recur within the duration.
    #[default]
    Recurrence,
    /// Same as `within`.
    PlainWithin,
}

pub fn simulate(
    domain: &DomainModel,
    problem: &ProblemModel,
    plan: &Plan,
) -> Result<StateTrajectory, SimulateError> {
    let mut state = problem.init.clone();
    let mut snapshots = vec![Snapshot {
        time: Time::ZERO,
        state: state.clone(),
    }];
    let mut clock = Time::ZERO;
    for (idx, step) in plan.steps.iter().enumerate() {
        let schema = domain
            .action(&step.action)
            .ok_or_else(|| SimulateError::UnknownAction {
                step: idx,
                action: step.action.clone(),
            })?;
        if schema.parameters.len() != step.args.len() {
            return Err(SimulateError::BadArguments {
                step: idx,
                message: format!(
                    "{} takes {} argument(s)",
                    schema.name,
                    schema.parameters.len()
                ),
            });
        }
        let mut binding = BTreeMap::new();
        for (param, arg) in schema.parameters.iter().zip(&step.args) {
            let ty =
                problem
                    .object_type(domain, arg)
                    .ok_or_else(|| SimulateError::UnknownObject {
                        step: idx,
                        object: arg.clone(),
                    })?;
            if !domain.is_subtype(ty, &param.type_name) {
                return Err(SimulateError::BadArguments {
                    step: idx,
                    message: format!(
                        "{arg} has type {ty}, parameter {} needs {}",
                        param.name, param.type_name
                    ),
                });
            }
            binding.insert(param.name.clone(), arg.clone());
        }
        if let Some(pre) = &schema.precondition {
            let ground = pre.substitute(&binding);
            if let Some(failed) = first_failure(&ground, &state) {
                return Err(SimulateError::InapplicableAction {
                    step: idx,
                    action: step.symbolic(),
                    failed: failed.to_string(),
                });
            }
        }
        for eff in schema.effects.iter().filter(|e| !e.positive) {
            state.remove(&eff.atom.substitute(&binding));
        }
        for eff in schema.effects.iter().filter(|e| e.positive) {
            state.insert(eff.atom.substitute(&binding));
        }
        // overlapping durative steps could finish out of order; keep stamps monotone
        clock = clock.max(step.start.saturating_add(step.duration));
        snapshots.push(Snapshot {
            time: clock,
            state: state.clone(),
        });
    }
    Ok(StateTrajectory { snapshots })
}

/// Smallest conjunct of `cond` that is false in `state`, if any.
fn first_failure<'a>(cond: &'a Condition, state: &BTreeSet<Atom>) -> Option<&'a Condition> {
    if cond.eval(&mut |a| state.contains(a)) {
        return None;
    }
    match cond {
        Condition::And(a, b) => first_failure(a, state).or_else(|| first_failure(b, state)),
        other => Some(other),
    }
}

/// Applies the temporal operator of `c` to per-snapshot truth values.
///
/// `times` must be non-decreasing and the same length as `phi` (and `psi`
/// for the two-condition forms).
pub fn eval_temporal(
    c: &TrajectoryConstraint,
    times: &[Time],
    phi: &[bool],
    psi: Option<&[bool]>,
    reading: AlwaysWithinReading,
) -> bool {
    use TrajectoryConstraint as T;
    debug_assert_eq!(times.len(), phi.len());
    let n = phi.len();
    match c {
        T::Always(_) => phi.iter().all(|&b| b),
        T::Sometime(_) => phi.iter().any(|&b| b),
        T::Within(d, _) => (0..n).any(|i| times[i] <= *d && phi[i]),
        T::AtMostOnce(_) => {
            let rises = (0..n)
                .filter(|&i| phi[i] && (i == 0 || !phi[i - 1]))
                .count();
            rises <= 1
        }
        T::SometimeAfter(..) => {
            let psi = psi.expect("two-condition constraint");
            let mut psi_later = false;
            for i in (0..n).rev() {
                psi_later |= psi[i];
                if phi[i] && !psi_later {
                    return false;
                }
            }
            true
        }
        T::SometimeBefore(..) => {
            let psi = psi.expect("two-condition constraint");
            let mut psi_earlier = false;
            for i in 0..n {
                if phi[i] && !psi_earlier {
                    return false;
                }
                psi_earlier |= psi[i];
            }
            true
        }
        T::AlwaysWithin(d, _) => match reading {
            AlwaysWithinReading::PlainWithin => (0..n).any(|i| times[i] <= *d && phi[i]),
            AlwaysWithinReading::Recurrence => {
                let mut next_true: Option<Time> = None;
                for i in (0..n).rev() {
                    if phi[i] {
                        next_true = Some(times[i]);
                    }
                    match next_true {
                        Some(t) if t <= times[i].saturating_add(*d) => {}
                        _ => return false,
                    }
                }
                true
            }
        },
        T::HoldDuring(d1, d2, _) => (0..n).all(|i| !(*d1 <= times[i] && times[i] < *d2) || phi[i]),
        T::HoldAfter(d, _) => (0..n).all(|i| times[i] <= *d || phi[i]),
        T::AtEnd(_) => phi.last().copied().unwrap_or(false),
    }
}

pub fn check_constraint(c: &TrajectoryConstraint, traj: &StateTrajectory) -> bool {
    check_constraint_with(c, traj, AlwaysWithinReading::default())
}

pub fn check_constraint_with(
    c: &TrajectoryConstraint,
    traj: &StateTrajectory,
    reading: AlwaysWithinReading,
) -> bool {
    let conds = c.conditions();
    let phi = traj.truth(conds[0]);
    let psi = conds.get(1).map(|c| traj.truth(c));
    eval_temporal(c, &traj.times(), &phi, psi.as_deref(), reading)
}

pub fn check_goal(problem: &ProblemModel, traj: &StateTrajectory) -> bool {
    let last = traj.final_state();
    problem.goal.eval(&mut |a| last.contains(a))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub goal_satisfied: bool,
    pub per_constraint: Vec<(TrajectoryConstraint, bool)>,
    pub adherence_rate: f64,
}

impl ValidationReport {
    /// Goal reached and every constraint holds.
    pub fn is_valid(&self) -> bool {
        self.goal_satisfied && self.per_constraint.iter().all(|(_, ok)| *ok)
    }

    /// One tab-separated line per constraint, then the adherence rate.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for (i, (c, ok)) in self.per_constraint.iter().enumerate() {
            let _ = writeln!(out, "{i}\t{c}\t{ok}");
        }
        let _ = writeln!(out, "adherence_rate\t{}", self.adherence_rate);
        out
    }
}

pub fn report_for(
    problem: &ProblemModel,
    traj: &StateTrajectory,
    spec: &Specification,
) -> ValidationReport {
    let per_constraint: Vec<(TrajectoryConstraint, bool)> = spec
        .iter()
        .map(|c| (c.clone(), check_constraint(c, traj)))
        .collect();
    let adherence_rate = if per_constraint.is_empty() {
        1.0
    } else {
        per_constraint.iter().filter(|(_, ok)| *ok).count() as f64 / per_constraint.len() as f64
    };
    ValidationReport {
        goal_satisfied: check_goal(problem, traj),
        per_constraint,
        adherence_rate,
    }
}

/// Simulates `plan` and checks the goal and every constraint of `spec`.
pub fn validate(
    domain: &DomainModel,
    problem: &ProblemModel,
    plan: &Plan,
    spec: &Specification,
) -> Result<ValidationReport, SimulateError> {
    let traj = simulate(domain, problem, plan)?;
    Ok(report_for(problem, &traj, spec))
}
