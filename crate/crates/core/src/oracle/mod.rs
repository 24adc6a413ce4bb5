//! Judges whether a plan adheres to natural-language feedback.
//!
//! Three judges share one interface: an exact one backed by the validator,
//! a noisy one that flips exact verdicts at configured rates to emulate a
//! learned classifier, and a remote one that asks a model server.

mod remote;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::pddl::{render_plan, DomainModel, Plan, ProblemModel, Specification};
use crate::validator::{check_constraint, simulate, StateTrajectory};

pub use remote::{RemoteOracle, RemoteRequest, RemoteResponse};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackStatement {
    pub text: String,
    /// Conjunction the statement stands for, when known.
    pub ground_truth: Option<Specification>,
}

impl FeedbackStatement {
    pub fn new(text: impl Into<String>, ground_truth: Option<Specification>) -> Self {
        FeedbackStatement {
            text: text.into(),
            ground_truth,
        }
    }
}

/// Ordered, non-empty list of feedback statements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackSet {
    statements: Vec<FeedbackStatement>,
}

impl FeedbackSet {
    pub fn new(statements: Vec<FeedbackStatement>) -> Result<Self, OracleError> {
        if statements.is_empty() {
            return Err(OracleError::EmptyFeedback);
        }
        Ok(FeedbackSet { statements })
    }

    pub fn statements(&self) -> &[FeedbackStatement] {
        &self.statements
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn extend(&mut self, more: impl IntoIterator<Item = FeedbackStatement>) {
        self.statements.extend(more);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdherenceJudgment {
    pub score: f64,
    pub adheres: bool,
}

impl AdherenceJudgment {
    pub fn from_score(score: f64) -> Self {
        let score = score.clamp(0.0, 1.0);
        AdherenceJudgment {
            score,
            adheres: score > 0.5,
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("feedback set is empty")]
    EmptyFeedback,
    #[error("statement '{0}' has no ground-truth constraint")]
    MissingGroundTruth(String),
    #[error("oracle transport failure: {0}")]
    Transport(String),
    #[error("malformed oracle response: {0}")]
    MalformedResponse(String),
}

pub trait AdherenceOracle: Send + Sync {
    fn id(&self) -> &str;

    fn assess(&self, plan: &Plan, f: &FeedbackStatement) -> Result<AdherenceJudgment, OracleError>;

    /// Fraction of statements the plan adheres to. A missing plan (the
    /// planner found none) adheres to nothing.
    fn rate(&self, plan: Option<&Plan>, feedback: &FeedbackSet) -> Result<f64, OracleError> {
        let Some(plan) = plan else { return Ok(0.0) };
        let mut hits = 0usize;
        for f in feedback.statements() {
            if self.assess(plan, f)?.adheres {
                hits += 1;
            }
        }
        Ok(hits as f64 / feedback.len() as f64)
    }

    /// Per-statement judgments, in feedback order.
    fn judge_all(
        &self,
        plan: &Plan,
        feedback: &FeedbackSet,
    ) -> Result<Vec<AdherenceJudgment>, OracleError> {
        feedback
            .statements()
            .iter()
            .map(|f| self.assess(plan, f))
            .collect()
    }
}

/// Ground-truth judge: runs the validator on the statement's constraint.
#[derive(Debug, Clone)]
pub struct ExactOracle {
    domain: Arc<DomainModel>,
    problem: Arc<ProblemModel>,
}

impl ExactOracle {
    pub fn new(domain: Arc<DomainModel>, problem: Arc<ProblemModel>) -> Self {
        ExactOracle { domain, problem }
    }

    fn trajectory(&self, plan: &Plan) -> Option<StateTrajectory> {
        simulate(&self.domain, &self.problem, plan).ok()
    }

    /// A plan that cannot be executed adheres to nothing.
    fn judge(
        traj: Option<&StateTrajectory>,
        f: &FeedbackStatement,
    ) -> Result<AdherenceJudgment, OracleError> {
        let truth = f
            .ground_truth
            .as_ref()
            .ok_or_else(|| OracleError::MissingGroundTruth(f.text.clone()))?;
        let ok = traj.is_some_and(|t| truth.iter().all(|c| check_constraint(c, t)));
        Ok(AdherenceJudgment::from_score(if ok { 1.0 } else { 0.0 }))
    }
}

impl AdherenceOracle for ExactOracle {
    fn id(&self) -> &str {
        "exact"
    }

    fn assess(&self, plan: &Plan, f: &FeedbackStatement) -> Result<AdherenceJudgment, OracleError> {
        Self::judge(self.trajectory(plan).as_ref(), f)
    }

    fn judge_all(
        &self,
        plan: &Plan,
        feedback: &FeedbackSet,
    ) -> Result<Vec<AdherenceJudgment>, OracleError> {
        let traj = self.trajectory(plan);
        feedback
            .statements()
            .iter()
            .map(|f| Self::judge(traj.as_ref(), f))
            .collect()
    }

    fn rate(&self, plan: Option<&Plan>, feedback: &FeedbackSet) -> Result<f64, OracleError> {
        let Some(plan) = plan else { return Ok(0.0) };
        let hits = self
            .judge_all(plan, feedback)?
            .iter()
            .filter(|j| j.adheres)
            .count();
        Ok(hits as f64 / feedback.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    pub false_positive_rate: f64,
    pub false_negative_rate: f64,
    pub seed: u64,
}

impl NoiseProfile {
    pub fn symmetric(rate: f64, seed: u64) -> Self {
        NoiseProfile {
            false_positive_rate: rate,
            false_negative_rate: rate,
            seed,
        }
    }
}

/// Uniform value in [0, 1) derived from the plan, the statement and the seed.
pub fn flip_draw(plan_text: &str, feedback_text: &str, seed: u64) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((plan_text.len() as u64).to_le_bytes());
    h.update(plan_text.as_bytes());
    h.update(feedback_text.as_bytes());
    let digest = h.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    (u64::from_le_bytes(word) >> 11) as f64 / (1u64 << 53) as f64
}

/// Exact verdicts flipped deterministically at the profile's rates.
#[derive(Debug, Clone)]
pub struct NoisyOracle {
    exact: ExactOracle,
    pub profile: NoiseProfile,
}

impl NoisyOracle {
    pub fn new(exact: ExactOracle, profile: NoiseProfile) -> Self {
        NoisyOracle { exact, profile }
    }

    fn distort(
        &self,
        plan_text: &str,
        f: &FeedbackStatement,
        exact: AdherenceJudgment,
    ) -> AdherenceJudgment {
        let rate = if exact.adheres {
            self.profile.false_negative_rate
        } else {
            self.profile.false_positive_rate
        };
        if flip_draw(plan_text, &f.text, self.profile.seed) < rate {
            AdherenceJudgment::from_score(1.0 - exact.score)
        } else {
            exact
        }
    }
}

impl AdherenceOracle for NoisyOracle {
    fn id(&self) -> &str {
        "noisy"
    }

    fn assess(&self, plan: &Plan, f: &FeedbackStatement) -> Result<AdherenceJudgment, OracleError> {
        let exact = self.exact.assess(plan, f)?;
        Ok(self.distort(&render_plan(plan), f, exact))
    }

    fn judge_all(
        &self,
        plan: &Plan,
        feedback: &FeedbackSet,
    ) -> Result<Vec<AdherenceJudgment>, OracleError> {
        let text = render_plan(plan);
        let exact = self.exact.judge_all(plan, feedback)?;
        Ok(feedback
            .statements()
            .iter()
            .zip(exact)
            .map(|(f, j)| self.distort(&text, f, j))
            .collect())
    }

    fn rate(&self, plan: Option<&Plan>, feedback: &FeedbackSet) -> Result<f64, OracleError> {
        let Some(plan) = plan else { return Ok(0.0) };
        let hits = self
            .judge_all(plan, feedback)?
            .iter()
            .filter(|j| j.adheres)
            .count();
        Ok(hits as f64 / feedback.len() as f64)
    }
}
