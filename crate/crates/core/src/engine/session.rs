//! Interactive feedback sessions.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};

use super::{EngineError, OracleChoice, TranslatorChoice};
use crate::corpus::Pack;
use crate::ga::{evolve, ConstraintPool, Evaluator, GAConfig, GenerationStats, Individual};
use crate::oracle::{FeedbackSet, FeedbackStatement};
use crate::pddl::{render_specification, Plan, Specification};
use crate::planner::Planner;
use crate::translator::{TemplateTranslator, Translator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Idle,
    Translating,
    Evolving,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub text: String,
    pub mid_level: Option<String>,
    /// Translated constraints, or `None` when translation failed.
    pub constraints: Option<Specification>,
    pub error: Option<String>,
    /// What exact judging compares against: the matching archetype's ground
    /// truth if there is one, otherwise the translation itself.
    pub ground_truth: Option<Specification>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentView {
    pub statement: String,
    pub adheres: bool,
    pub score: f64,
}

/// Steps gained and lost between two consecutive best plans.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanDiff {
    pub added: Vec<String>,
    pub removed: Vec<String>,
}

impl PlanDiff {
    pub fn between(old: Option<&Plan>, new: Option<&Plan>) -> PlanDiff {
        let steps = |p: Option<&Plan>| -> Vec<String> {
            p.map_or_else(Vec::new, |p| p.steps.iter().map(|s| s.symbolic()).collect())
        };
        let (old, new) = (steps(old), steps(new));
        let mut remaining = old.clone();
        let mut added = Vec::new();
        for s in new {
            match remaining.iter().position(|r| *r == s) {
                Some(i) => {
                    remaining.remove(i);
                }
                None => added.push(s),
            }
        }
        PlanDiff {
            added,
            removed: remaining,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub statements: usize,
    pub initial: String,
    pub generations: Vec<GenerationStats>,
    pub reached_full_adherence: bool,
    pub diff: PlanDiff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub pack: String,
    pub problem_id: String,
    pub status: SessionStatus,
    pub failure: Option<String>,
    pub base_plan: Option<Plan>,
    pub feedback: Vec<FeedbackRecord>,
    pub best: Option<Individual>,
    pub judgments: Vec<JudgmentView>,
    pub runs: Vec<RunRecord>,
}

impl Session {
    /// Best plan so far, falling back to the plan for the bare goal.
    pub fn current_plan(&self) -> Option<&Plan> {
        self.best
            .as_ref()
            .and_then(Individual::plan)
            .or(self.base_plan.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub generation: usize,
    pub best_fitness: f64,
    pub evaluations: usize,
    pub status: SessionStatus,
    /// Best fitness per generation of the current run.
    pub fitness_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    #[serde(flatten)]
    pub session: Session,
    pub progress: Progress,
}

struct Inner {
    state: Mutex<Session>,
    progress: Mutex<Progress>,
    /// Held for the whole of a refinement; later feedback waits its turn.
    run: Mutex<()>,
}

#[derive(Clone)]
pub struct SessionHandle(Arc<Inner>);

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl SessionHandle {
    pub fn id(&self) -> String {
        lock(&self.0.state).id.clone()
    }

    pub fn snapshot(&self) -> Session {
        lock(&self.0.state).clone()
    }

    pub fn progress(&self) -> Progress {
        lock(&self.0.progress).clone()
    }

    pub fn view(&self) -> SessionView {
        SessionView {
            session: self.snapshot(),
            progress: self.progress(),
        }
    }

    fn set_status(&self, status: SessionStatus, failure: Option<String>) {
        let mut s = lock(&self.0.state);
        s.status = status;
        s.failure = failure;
        lock(&self.0.progress).status = status;
    }
}

/// Holds packs and pipeline settings, and runs refinements.
pub struct Engine {
    packs: BTreeMap<String, Arc<Pack>>,
    pub planner: Arc<dyn Planner>,
    pub ga: GAConfig,
    pub oracle: OracleChoice,
    pub translator: TranslatorChoice,
    /// Duration bound of constraints the search samples.
    pub horizon: u64,
    /// Replace earlier feedback instead of accumulating it.
    pub replace_feedback: bool,
    next_id: AtomicU64,
}

impl Engine {
    pub fn new(planner: Arc<dyn Planner>, packs: impl IntoIterator<Item = Pack>) -> Engine {
        Engine {
            packs: packs
                .into_iter()
                .map(|p| (p.name.clone(), Arc::new(p)))
                .collect(),
            planner,
            ga: GAConfig::default(),
            oracle: OracleChoice::Exact,
            translator: TranslatorChoice::Template {
                error_rate: 0.0,
                seed: 0,
            },
            horizon: 10,
            replace_feedback: false,
            next_id: AtomicU64::new(1),
        }
    }

    pub fn pack(&self, name: &str) -> Result<Arc<Pack>, EngineError> {
        self.packs
            .get(name)
            .cloned()
            .ok_or_else(|| EngineError::UnknownPack(name.to_string()))
    }

    pub fn pack_names(&self) -> Vec<String> {
        self.packs.keys().cloned().collect()
    }

    /// Opens a session and plans for the bare goal.
    pub fn create_session(
        &self,
        pack_name: &str,
        problem_id: &str,
    ) -> Result<SessionHandle, EngineError> {
        let pack = self.pack(pack_name)?;
        let problem = pack
            .problem(problem_id)
            .ok_or_else(|| EngineError::UnknownProblem {
                pack: pack_name.to_string(),
                problem: problem_id.to_string(),
            })?;
        let base = self
            .planner
            .plan(&pack.domain, problem, &Specification::default())?;
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let session = Session {
            id,
            pack: pack_name.to_string(),
            problem_id: problem_id.to_string(),
            status: SessionStatus::Idle,
            failure: None,
            base_plan: base.outcome.into_plan(),
            feedback: Vec::new(),
            best: None,
            judgments: Vec::new(),
            runs: Vec::new(),
        };
        Ok(SessionHandle(Arc::new(Inner {
            state: Mutex::new(session),
            progress: Mutex::new(Progress {
                generation: 0,
                best_fitness: 0.0,
                evaluations: 0,
                status: SessionStatus::Idle,
                fitness_history: Vec::new(),
            }),
            run: Mutex::new(()),
        })))
    }

    /// Natural-language rendering of the session's current plan.
    pub fn describe(&self, session: &Session) -> Vec<String> {
        let (Ok(pack), Some(plan)) = (self.pack(&session.pack), session.current_plan()) else {
            return Vec::new();
        };
        match pack.problem(&session.problem_id) {
            Some(problem) => pack.phrases.describe_plan(plan, &pack.domain, problem),
            None => Vec::new(),
        }
    }

    /// Translates new feedback, seeds the search with the translations and
    /// evolves a plan that adheres to everything said so far.
    pub fn refine(&self, handle: &SessionHandle, statements: &[String]) -> Result<(), EngineError> {
        let statements: Vec<&str> = statements
            .iter()
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .collect();
        if statements.is_empty() {
            return Err(EngineError::EmptyFeedback);
        }
        let _turn = lock(&handle.0.run);
        let result = self.refine_locked(handle, &statements);
        if let Err(e) = &result {
            handle.set_status(SessionStatus::Failed, Some(e.to_string()));
        }
        result
    }

    fn refine_locked(
        &self,
        handle: &SessionHandle,
        statements: &[&str],
    ) -> Result<(), EngineError> {
        let snapshot = handle.snapshot();
        let pack = self.pack(&snapshot.pack)?;
        let problem =
            pack.problem(&snapshot.problem_id)
                .ok_or_else(|| EngineError::UnknownProblem {
                    pack: snapshot.pack.clone(),
                    problem: snapshot.problem_id.clone(),
                })?;
        let domain = &pack.domain;

        handle.set_status(SessionStatus::Translating, None);
        {
            let mut p = lock(&handle.0.progress);
            p.generation = 0;
            p.best_fitness = 0.0;
            p.evaluations = 0;
            p.fitness_history.clear();
        }
        let translator = self.translator.build(&pack, self.horizon)?;
        let resolver = TemplateTranslator::new(pack.archetypes.clone());
        let mut fresh = Vec::new();
        for &text in statements {
            let mut record = FeedbackRecord {
                text: text.to_string(),
                mid_level: None,
                constraints: None,
                error: None,
                ground_truth: None,
            };
            match translator.translate(text, domain, problem) {
                Ok(outcome) => {
                    record.mid_level = Some(outcome.mid_level.text.clone());
                    match outcome.constraints() {
                        Some(c) => record.constraints = Some(c.clone()),
                        None => record.error = Some(format!("{:?}", outcome.translation)),
                    }
                }
                Err(e) => record.error = Some(e.to_string()),
            }
            record.ground_truth = resolver
                .translate(text, domain, problem)
                .ok()
                .and_then(|o| o.constraints().cloned())
                .or_else(|| record.constraints.clone());
            fresh.push(record);
        }
        if fresh.iter().all(|r| r.constraints.is_none()) {
            let reasons: Vec<String> = fresh.iter().filter_map(|r| r.error.clone()).collect();
            let mut s = lock(&handle.0.state);
            s.feedback.extend(fresh);
            drop(s);
            return Err(EngineError::TranslationFailed(reasons.join("; ")));
        }

        let records = {
            let mut s = lock(&handle.0.state);
            if self.replace_feedback {
                s.feedback.clear();
            }
            s.feedback.extend(fresh);
            s.feedback.clone()
        };
        let mut seen = BTreeSet::new();
        let initial: Specification = records
            .iter()
            .filter_map(|r| r.constraints.as_ref())
            .flat_map(|c| c.iter().cloned())
            .filter(|c| seen.insert(c.to_string()))
            .collect();
        let statements: Vec<FeedbackStatement> = records
            .iter()
            .filter(|r| r.constraints.is_some())
            .map(|r| FeedbackStatement::new(r.text.clone(), r.ground_truth.clone()))
            .collect();
        let feedback = FeedbackSet::new(statements)?;

        handle.set_status(SessionStatus::Evolving, None);
        let oracle = self
            .oracle
            .build(&pack, Arc::new(domain.clone()), Arc::new(problem.clone()));
        let evaluator = Evaluator::new(
            domain,
            problem,
            self.planner.as_ref(),
            oracle.as_ref(),
            &feedback,
        );
        let pool = ConstraintPool::enumerate(domain, problem, self.horizon);
        let observer = |g: &GenerationStats| {
            let mut p = lock(&handle.0.progress);
            p.generation = g.generation;
            p.best_fitness = p.best_fitness.max(g.best_fitness);
            p.evaluations = g.planner_calls + g.memo_hits;
            let best = p.best_fitness;
            p.fitness_history.push(best);
        };
        let result = evolve(&initial, &pool, &evaluator, &self.ga, Some(&observer))?;
        let judgments = match result.best.plan() {
            Some(plan) => oracle
                .judge_all(plan, &feedback)?
                .into_iter()
                .zip(feedback.statements())
                .map(|(j, f)| JudgmentView {
                    statement: f.text.clone(),
                    adheres: j.adheres,
                    score: j.score,
                })
                .collect(),
            None => feedback
                .statements()
                .iter()
                .map(|f| JudgmentView {
                    statement: f.text.clone(),
                    adheres: false,
                    score: 0.0,
                })
                .collect(),
        };

        let mut s = lock(&handle.0.state);
        let diff = PlanDiff::between(s.current_plan(), result.best.plan());
        s.runs.push(RunRecord {
            statements: feedback.len(),
            initial: render_specification(&initial),
            generations: result.history.clone(),
            reached_full_adherence: result.reached_full_adherence(),
            diff,
        });
        s.best = Some(result.best);
        s.judgments = judgments;
        drop(s);
        handle.set_status(SessionStatus::Done, None);
        Ok(())
    }
}
