//! Pipeline orchestration: feedback sessions and corpus experiments.

mod experiment;
mod session;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, Pack};
use crate::ga::GaError;
use crate::oracle::{
    AdherenceOracle, ExactOracle, NoiseProfile, NoisyOracle, OracleError, RemoteOracle,
};
use crate::pddl::{DomainModel, ProblemModel};
use crate::planner::PlannerError;
use crate::translator::{
    FixtureChat, HttpChat, RemoteTranslator, TemplateTranslator, TranslateError, Translator,
};

pub use experiment::{
    run_experiment, ArchetypeCounts, CrossTable, ElementResult, ExperimentConfig, ExperimentMode,
    ExperimentReport, FailureCounts, FailureMode,
};
pub use session::{
    Engine, FeedbackRecord, JudgmentView, PlanDiff, Progress, RunRecord, Session, SessionHandle,
    SessionStatus, SessionView,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("feedback list is empty")]
    EmptyFeedback,
    #[error("unknown pack '{0}'")]
    UnknownPack(String),
    #[error("pack '{pack}' has no problem '{problem}'")]
    UnknownProblem { pack: String, problem: String },
    #[error("no statement could be translated: {0}")]
    TranslationFailed(String),
    #[error("translator setup failed: {0}")]
    TranslatorSetup(String),
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Ga(#[from] GaError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// How plans are judged against feedback during the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OracleChoice {
    Exact,
    Noisy(NoiseProfile),
    Remote {
        endpoint: String,
        timeout_ms: u64,
        token_env: Option<String>,
    },
}

impl OracleChoice {
    pub fn build(
        &self,
        pack: &Pack,
        domain: Arc<DomainModel>,
        problem: Arc<ProblemModel>,
    ) -> Box<dyn AdherenceOracle> {
        match self {
            OracleChoice::Exact => Box::new(ExactOracle::new(domain, problem)),
            OracleChoice::Noisy(profile) => Box::new(NoisyOracle::new(
                ExactOracle::new(domain, problem),
                *profile,
            )),
            OracleChoice::Remote {
                endpoint,
                timeout_ms,
                token_env,
            } => {
                let mut o = RemoteOracle::new(
                    endpoint.clone(),
                    Duration::from_millis(*timeout_ms),
                    domain,
                    problem,
                    Arc::new(pack.phrases.clone()),
                );
                o.token_env = token_env.clone();
                Box::new(o)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            OracleChoice::Exact => "exact".into(),
            OracleChoice::Noisy(p) => format!(
                "noisy(fp={},fn={})",
                p.false_positive_rate, p.false_negative_rate
            ),
            OracleChoice::Remote { endpoint, .. } => format!("remote({endpoint})"),
        }
    }
}

/// How feedback statements become constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TranslatorChoice {
    Template {
        error_rate: f64,
        seed: u64,
    },
    Remote {
        url: String,
        model: String,
        token_env: String,
        timeout_ms: u64,
    },
    /// Replays recorded model responses from a JSON file.
    Fixture {
        path: PathBuf,
    },
}

impl TranslatorChoice {
    pub fn build(&self, pack: &Pack, horizon: u64) -> Result<Box<dyn Translator>, EngineError> {
        Ok(match self {
            TranslatorChoice::Template { error_rate, seed } => {
                let mut t = TemplateTranslator::new(pack.archetypes.clone())
                    .with_errors(*error_rate, *seed);
                t.horizon = horizon;
                Box::new(t)
            }
            TranslatorChoice::Remote {
                url,
                model,
                token_env,
                timeout_ms,
            } => Box::new(RemoteTranslator::new(Box::new(HttpChat::new(
                url.clone(),
                model.clone(),
                token_env.clone(),
                Duration::from_millis(*timeout_ms),
            )))),
            TranslatorChoice::Fixture { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    EngineError::TranslatorSetup(format!("{}: {e}", path.display()))
                })?;
                let chat = FixtureChat::from_json(&text).map_err(|e| {
                    EngineError::TranslatorSetup(format!("{}: {e}", path.display()))
                })?;
                Box::new(RemoteTranslator::new(Box::new(chat)))
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            TranslatorChoice::Template { error_rate, .. } => {
                format!("template(error={error_rate})")
            }
            TranslatorChoice::Remote { model, .. } => format!("remote({model})"),
            TranslatorChoice::Fixture { path } => format!("fixture({})", path.display()),
        }
    }
}
