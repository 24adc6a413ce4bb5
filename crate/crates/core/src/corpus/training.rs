//! Labelled (plan, constraint) examples for training a learned adherence
//! judge.
//!
//! For each feedback instance a spec of k atomic constraints is sampled
//! until the planner solves it; its plan then satisfies all k (positives).
//! A second spec of k constraints the same plan violates supplies the
//! negatives.

use std::collections::BTreeSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::ga::ConstraintPool;
use crate::pddl::{
    render_constraint, DomainModel, Plan, ProblemModel, Specification, TrajectoryConstraint,
};
use crate::planner::Planner;
use crate::validator::{check_constraint, simulate, StateTrajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainingLabel {
    Positive,
    Negative,
}

/// One line of the training output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInstance {
    pub problem_id: String,
    pub plan_steps: Vec<String>,
    /// Constraint in PDDL3 text; statements stay symbolic offline.
    pub statement: String,
    pub label: TrainingLabel,
}

/// A solved spec, its plan, and the examples derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackInstance {
    pub problem_id: String,
    pub plan: Plan,
    pub positive: Vec<TrajectoryConstraint>,
    pub negative: Vec<TrajectoryConstraint>,
}

impl FeedbackInstance {
    pub fn examples(&self) -> Vec<TrainingInstance> {
        let steps: Vec<String> = self.plan.steps.iter().map(|s| s.symbolic()).collect();
        let label = |c: &TrajectoryConstraint, label| TrainingInstance {
            problem_id: self.problem_id.clone(),
            plan_steps: steps.clone(),
            statement: render_constraint(c),
            label,
        };
        self.positive
            .iter()
            .map(|c| label(c, TrainingLabel::Positive))
            .chain(
                self.negative
                    .iter()
                    .map(|c| label(c, TrainingLabel::Negative)),
            )
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub per_problem: usize,
    pub min_size: usize,
    pub max_size: usize,
    /// Duration bound of the sampled constraints.
    pub horizon: u64,
    /// Spec draws allowed per instance before the problem counts as exhausted.
    pub attempts: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            per_problem: 20,
            min_size: 2,
            max_size: 5,
            horizon: 10,
            attempts: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrainingOutput {
    pub instances: Vec<FeedbackInstance>,
    /// Problems that ran out of attempts, with the reason.
    pub exhausted: Vec<(String, String)>,
}

impl TrainingOutput {
    pub fn examples(&self) -> Vec<TrainingInstance> {
        self.instances
            .iter()
            .flat_map(FeedbackInstance::examples)
            .collect()
    }

    /// Line-delimited JSON, one example per line.
    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for e in self.examples() {
            serde_json::to_writer(&mut out, &e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn distinct(
    pool: &ConstraintPool,
    k: usize,
    rng: &mut ChaCha8Rng,
    keep: impl Fn(&TrajectoryConstraint) -> bool,
    budget: usize,
) -> Option<Vec<TrajectoryConstraint>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(k);
    for _ in 0..budget {
        if out.len() == k {
            break;
        }
        let c = pool.sample(rng);
        if keep(&c) && seen.insert(c.to_string()) {
            out.push(c);
        }
    }
    (out.len() == k).then_some(out)
}

fn one_instance(
    id: &str,
    domain: &DomainModel,
    problem: &ProblemModel,
    pool: &ConstraintPool,
    planner: &dyn Planner,
    cfg: &TrainingConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Option<FeedbackInstance>, CorpusError> {
    for _ in 0..cfg.attempts {
        let k = rng.random_range(cfg.min_size..=cfg.max_size);
        let Some(positive) = distinct(pool, k, rng, |_| true, 50 * k) else {
            continue;
        };
        let spec = Specification::new(positive.clone());
        let Some(plan) = planner.plan(domain, problem, &spec)?.outcome.into_plan() else {
            continue;
        };
        let Ok(traj) = simulate(domain, problem, &plan) else {
            continue;
        };
        let holds = |c: &TrajectoryConstraint, t: &StateTrajectory| check_constraint(c, t);
        if !positive.iter().all(|c| holds(c, &traj)) {
            continue;
        }
        let Some(negative) = distinct(pool, k, rng, |c| !holds(c, &traj), 200 * k) else {
            continue;
        };
        return Ok(Some(FeedbackInstance {
            problem_id: id.to_string(),
            plan,
            positive,
            negative,
        }));
    }
    Ok(None)
}

/// Generates `cfg.per_problem` instances for each problem. Problems that
/// exhaust their attempt budget are reported and skipped.
pub fn generate_training_instances(
    domain: &DomainModel,
    problems: &[(String, ProblemModel)],
    planner: &dyn Planner,
    cfg: &TrainingConfig,
) -> Result<TrainingOutput, CorpusError> {
    if cfg.min_size == 0 || cfg.min_size > cfg.max_size {
        return Err(CorpusError::InvalidConfig(format!(
            "bad spec size range {}..={}",
            cfg.min_size, cfg.max_size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = TrainingOutput::default();
    for (id, problem) in problems {
        let pool = ConstraintPool::enumerate(domain, problem, cfg.horizon);
        for n in 0..cfg.per_problem {
            match one_instance(id, domain, problem, &pool, planner, cfg, &mut rng)? {
                Some(inst) => out.instances.push(inst),
                None => {
                    out.exhausted.push((
                        id.clone(),
                        format!(
                            "no solvable spec after {} attempts at instance {n}",
                            cfg.attempts
                        ),
                    ));
                    break;
                }
            }
        }
    }
    Ok(out)
}
