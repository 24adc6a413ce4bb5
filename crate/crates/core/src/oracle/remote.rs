//! Client for a model server that scores plan/feedback pairs over HTTP.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use ureq::Agent;

use super::{AdherenceJudgment, AdherenceOracle, FeedbackStatement, OracleError};
use crate::pddl::{DomainModel, Plan, ProblemModel};
use crate::translator::PhraseTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteRequest {
    pub plan_steps: Vec<String>,
    pub feedback: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteResponse {
    pub score: f64,
}

pub struct RemoteOracle {
    endpoint: String,
    agent: Agent,
    attempts: u32,
    /// Environment variable holding a bearer token, if the server wants one.
    pub token_env: Option<String>,
    domain: Arc<DomainModel>,
    problem: Arc<ProblemModel>,
    phrases: Arc<PhraseTable>,
}

impl RemoteOracle {
    pub fn new(
        endpoint: impl Into<String>,
        timeout: Duration,
        domain: Arc<DomainModel>,
        problem: Arc<ProblemModel>,
        phrases: Arc<PhraseTable>,
    ) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        RemoteOracle {
            endpoint: endpoint.into(),
            agent,
            attempts: 2,
            token_env: None,
            domain,
            problem,
            phrases,
        }
    }

    pub fn with_attempts(mut self, attempts: u32) -> Self {
        self.attempts = attempts.max(1);
        self
    }

    fn call(&self, body: &RemoteRequest) -> Result<RemoteResponse, OracleError> {
        let mut req = self.agent.post(&self.endpoint);
        if let Some(token) = self
            .token_env
            .as_deref()
            .and_then(|v| std::env::var(v).ok())
        {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| OracleError::Transport(e.to_string()))?;
        resp.body_mut()
            .read_json::<RemoteResponse>()
            .map_err(|e| OracleError::MalformedResponse(e.to_string()))
    }
}

impl AdherenceOracle for RemoteOracle {
    fn id(&self) -> &str {
        "remote"
    }

    fn assess(&self, plan: &Plan, f: &FeedbackStatement) -> Result<AdherenceJudgment, OracleError> {
        let body = RemoteRequest {
            plan_steps: self
                .phrases
                .describe_plan(plan, &self.domain, &self.problem),
            feedback: f.text.clone(),
        };
        let mut last = OracleError::Transport("no attempt made".into());
        for _ in 0..self.attempts {
            match self.call(&body) {
                Ok(r) if (0.0..=1.0).contains(&r.score) => {
                    return Ok(AdherenceJudgment::from_score(r.score))
                }
                Ok(r) => {
                    return Err(OracleError::MalformedResponse(format!(
                        "score {} outside [0, 1]",
                        r.score
                    )))
                }
                // a malformed body will not improve on retry
                Err(e @ OracleError::MalformedResponse(_)) => return Err(e),
                Err(e) => last = e,
            }
        }
        Err(last)
    }
}
