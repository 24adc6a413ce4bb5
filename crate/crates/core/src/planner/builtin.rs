//! Breadth-first forward search over ground actions with constraint
//! monitors pruning dead prefixes.
//!
//! Steps run back to back, each lasting its schema duration, so the search
//! finds a plan with the fewest steps. Ties are broken by the canonical order
//! of ground actions, which makes the result deterministic.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use crate::pddl::{DomainModel, Plan, PlanStep, ProblemModel, Specification, Time};
use crate::validator::{check_constraint_with, check_goal, simulate, AlwaysWithinReading};

use super::ground::{BitState, Cond, GroundTask};
use super::monitor::Monitor;
use super::{all_constraints, PlanOutcome, Planner, PlannerError, PlannerResult};

#[derive(Debug, Clone)]
pub struct BuiltinPlanner {
    /// Longest plan considered.
    pub horizon: usize,
    pub timeout: Duration,
    pub reading: AlwaysWithinReading,
}

impl Default for BuiltinPlanner {
    fn default() -> Self {
        BuiltinPlanner {
            horizon: 48,
            timeout: Duration::from_secs(30),
            reading: AlwaysWithinReading::default(),
        }
    }
}

impl Planner for BuiltinPlanner {
    fn id(&self) -> &str {
        "builtin-bfs"
    }

    fn plan(
        &self,
        domain: &DomainModel,
        problem: &ProblemModel,
        spec: &Specification,
    ) -> Result<PlannerResult, PlannerError> {
        let started = Instant::now();
        let outcome = search(domain, problem, &all_constraints(problem, spec), self);
        Ok(PlannerResult {
            outcome,
            wall_time: started.elapsed(),
            planner_id: self.id().to_string(),
        })
    }
}

pub fn plan_builtin(
    domain: &DomainModel,
    problem: &ProblemModel,
    spec: &Specification,
    horizon: usize,
    timeout: Duration,
) -> PlannerResult {
    let planner = BuiltinPlanner {
        horizon,
        timeout,
        ..BuiltinPlanner::default()
    };
    planner
        .plan(domain, problem, spec)
        .expect("built-in search has no infrastructure errors")
}

struct Node {
    parent: u32,
    action: u32,
    depth: u32,
    time: Time,
    state: BitState,
    progress: Box<[u64]>,
}

#[derive(PartialEq, Eq, Hash)]
struct Key {
    state: BitState,
    progress: Box<[u64]>,
    time: Option<Time>,
}

fn search(
    domain: &DomainModel,
    problem: &ProblemModel,
    constraints: &Specification,
    cfg: &BuiltinPlanner,
) -> PlanOutcome {
    let deadline = Instant::now() + cfg.timeout;
    let task = GroundTask::new(domain, problem);
    let monitors: Vec<Monitor> = constraints
        .iter()
        .map(|c| Monitor::compile(c, &task, cfg.reading))
        .collect();
    let goal: Cond = task.compile(&problem.goal);
    let timed = monitors.iter().any(Monitor::time_dependent);
    let durations: Vec<Time> = task
        .actions
        .iter()
        .map(|a| {
            domain
                .action(&a.name)
                .map_or(Time::from_units(1), |s| s.duration)
        })
        .collect();

    let advance = |progress: &[u64], s: &BitState, t: Time| -> Option<Box<[u64]>> {
        monitors
            .iter()
            .zip(progress)
            .map(|(m, &p)| m.observe(p, s, t))
            .collect()
    };
    let accepts = |progress: &[u64], s: &BitState| {
        monitors.iter().zip(progress).all(|(m, &p)| m.accepts(p, s))
    };
    let key = |n: &Node| Key {
        state: n.state.clone(),
        progress: n.progress.clone(),
        time: timed.then_some(n.time),
    };

    let initial: Vec<u64> = monitors.iter().map(Monitor::initial).collect();
    let Some(progress) = advance(&initial, &task.init, Time::ZERO) else {
        return PlanOutcome::Unsolvable;
    };
    let root = Node {
        parent: u32::MAX,
        action: u32::MAX,
        depth: 0,
        time: Time::ZERO,
        state: task.init.clone(),
        progress,
    };
    let mut nodes = vec![root];
    let mut seen: HashSet<Key> = HashSet::new();
    seen.insert(key(&nodes[0]));

    let extract = |nodes: &[Node], mut ix: usize| -> Plan {
        let mut rev = Vec::new();
        while nodes[ix].parent != u32::MAX {
            let n = &nodes[ix];
            let a = &task.actions[n.action as usize];
            let dur = durations[n.action as usize];
            rev.push(PlanStep {
                start: Time::from_millis(n.time.millis() - dur.millis()),
                action: a.name.clone(),
                args: a.args.clone(),
                duration: dur,
            });
            ix = n.parent as usize;
        }
        rev.reverse();
        Plan { steps: rev }
    };
    // the monitors prune, the validator has the final word
    let confirmed = |plan: &Plan| -> bool {
        match simulate(domain, problem, plan) {
            Ok(traj) => {
                check_goal(problem, &traj)
                    && constraints
                        .iter()
                        .all(|c| check_constraint_with(c, &traj, cfg.reading))
            }
            Err(_) => false,
        }
    };

    if goal.eval(&nodes[0].state) && accepts(&nodes[0].progress, &nodes[0].state) {
        let plan = Plan::default();
        if confirmed(&plan) {
            return PlanOutcome::Solved(plan);
        }
    }

    let mut head = 0;
    while head < nodes.len() {
        if head % 256 == 0 && Instant::now() >= deadline {
            return PlanOutcome::Timeout;
        }
        if nodes[head].depth as usize >= cfg.horizon {
            head += 1;
            continue;
        }
        for (ai, action) in task.actions.iter().enumerate() {
            let parent = &nodes[head];
            if !action.pre.eval(&parent.state) {
                continue;
            }
            let state = action.apply(&parent.state);
            let time = parent.time.saturating_add(durations[ai]);
            let Some(progress) = advance(&parent.progress, &state, time) else {
                continue;
            };
            let child = Node {
                parent: head as u32,
                action: ai as u32,
                depth: parent.depth + 1,
                time,
                state,
                progress,
            };
            if !seen.insert(key(&child)) {
                continue;
            }
            let done = goal.eval(&child.state) && accepts(&child.progress, &child.state);
            nodes.push(child);
            if done {
                let plan = extract(&nodes, nodes.len() - 1);
                if confirmed(&plan) {
                    return PlanOutcome::Solved(plan);
                }
            }
        }
        head += 1;
    }
    PlanOutcome::Unsolvable
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_specification, render_plan};
    use crate::testutil::naval_mini;
    use crate::validator::validate;

    fn run(spec: &str) -> PlanOutcome {
        let (d, p) = naval_mini();
        let spec = parse_specification(spec, &d, &p).unwrap();
        plan_builtin(&d, &p, &spec, 20, Duration::from_secs(20)).outcome
    }

    #[test]
    fn unconstrained_mini_plan_is_valid_and_short() {
        let (d, p) = naval_mini();
        let PlanOutcome::Solved(plan) = run("") else {
            panic!("expected a plan")
        };
        assert!(validate(&d, &p, &plan, &Specification::default())
            .unwrap()
            .is_valid());
        // clear the debris, fetch the ship, tow it back
        assert_eq!(plan.len(), 6, "{}", render_plan(&plan));
    }

    #[test]
    fn constraint_forces_detour() {
        let (d, p) = naval_mini();
        let spec_text = "(:constraints (sometime (at sct_ast_0 wpt_end)))";
        let PlanOutcome::Solved(plan) = run(spec_text) else {
            panic!("expected a plan")
        };
        let spec = parse_specification(spec_text, &d, &p).unwrap();
        assert!(validate(&d, &p, &plan, &spec).unwrap().is_valid());
        assert!(plan
            .steps
            .iter()
            .any(|s| s.action == "move" && s.args[0] == "sct_ast_0"));
        assert_eq!(plan.len(), 8, "{}", render_plan(&plan));
    }

    #[test]
    fn contradictory_constraints_are_unsolvable() {
        let out =
            run("(:constraints (and (always (at shp_0 wpt_end)) (sometime (at shp_0 wpt_ini))))");
        assert_eq!(out, PlanOutcome::Unsolvable);
    }

    #[test]
    fn deterministic() {
        let a = run("(:constraints (sometime (at slv_ast_0 wpt_b_0)))");
        let b = run("(:constraints (sometime (at slv_ast_0 wpt_b_0)))");
        assert_eq!(a, b);
    }

    #[test]
    fn zero_timeout_reports_timeout() {
        let (d, p) = naval_mini();
        let out = plan_builtin(&d, &p, &Specification::default(), 20, Duration::ZERO).outcome;
        assert_eq!(out, PlanOutcome::Timeout);
    }
}
