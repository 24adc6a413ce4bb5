//! Translation through a chat-completion model, live or replayed.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use ureq::Agent;

use super::{MidLevelConstraint, TranslateError, Translation, TranslationOutcome, Translator};
use crate::pddl::{extract_constraints, DomainModel, ProblemModel};

/// Bumped whenever a prompt file changes meaningfully.
pub const PROMPT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    MidLevel,
    Constraint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub mid_level: String,
    pub constraint: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet {
            mid_level: include_str!("../../prompts/mid_level.txt").to_string(),
            constraint: include_str!("../../prompts/constraint.txt").to_string(),
        }
    }
}

/// One model call. `input` is the stage's variable part (the feedback or the
/// mid-level text); `prompt` is the fully rendered text sent to the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatRequest {
    pub stage: Stage,
    pub input: String,
    pub prompt: String,
    pub attempt: u32,
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, TranslateError>;
}

pub fn render_prompt(
    template: &str,
    domain: &DomainModel,
    problem: &ProblemModel,
    vars: &[(&str, &str)],
) -> String {
    let mut predicates = String::new();
    for p in &domain.predicates {
        let _ = write!(predicates, "({}", p.name);
        for param in &p.parameters {
            let _ = write!(predicates, " {} - {}", param.name, param.type_name);
        }
        predicates.push_str(")\n");
    }
    let mut objects = String::new();
    for (o, t) in domain.constants.iter().chain(&problem.objects) {
        let _ = writeln!(objects, "{o} - {t}");
    }
    let mut out = template
        .replace("{predicates}", predicates.trim_end())
        .replace("{objects}", objects.trim_end());
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

/// OpenAI-style chat completion endpoint.
pub struct HttpChat {
    pub url: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub token_env: String,
    agent: Agent,
}

impl HttpChat {
    pub fn new(
        url: impl Into<String>,
        model: impl Into<String>,
        token_env: impl Into<String>,
        timeout: Duration,
    ) -> Self {
        HttpChat {
            url: url.into(),
            model: model.into(),
            token_env: token_env.into(),
            agent: Agent::config_builder()
                .timeout_global(Some(timeout))
                .build()
                .into(),
        }
    }
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatBody<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatReply {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReplyMessage,
}

#[derive(Deserialize)]
struct ChatReplyMessage {
    content: String,
}

impl ChatBackend for HttpChat {
    fn complete(&self, request: &ChatRequest) -> Result<String, TranslateError> {
        let body = ChatBody {
            model: &self.model,
            messages: vec![ChatMessage {
                role: "user",
                content: &request.prompt,
            }],
            temperature: 0.0,
        };
        let mut req = self.agent.post(&self.url);
        if let Ok(token) = std::env::var(&self.token_env) {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| TranslateError::Transport(e.to_string()))?;
        let reply: ChatReply = resp
            .body_mut()
            .read_json()
            .map_err(|e| TranslateError::Transport(format!("unreadable reply: {e}")))?;
        reply
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| TranslateError::Transport("reply has no choices".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub stage: Stage,
    pub input: String,
    pub response: String,
}

/// Replays recorded responses, keyed by stage and input.
#[derive(Debug, Clone, Default)]
pub struct FixtureChat {
    entries: HashMap<(Stage, String), String>,
}

impl FixtureChat {
    pub fn new(entries: impl IntoIterator<Item = FixtureEntry>) -> Self {
        FixtureChat {
            entries: entries
                .into_iter()
                .map(|e| ((e.stage, e.input), e.response))
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let entries: Vec<FixtureEntry> = serde_json::from_str(text)?;
        Ok(Self::new(entries))
    }
}

impl ChatBackend for FixtureChat {
    fn complete(&self, request: &ChatRequest) -> Result<String, TranslateError> {
        self.entries
            .get(&(request.stage, request.input.clone()))
            .cloned()
            .ok_or_else(|| {
                TranslateError::Transport(format!(
                    "no recorded response for {:?} '{}'",
                    request.stage, request.input
                ))
            })
    }
}

pub struct RemoteTranslator {
    pub backend: Box<dyn ChatBackend>,
    pub prompts: PromptSet,
}

impl RemoteTranslator {
    pub fn new(backend: Box<dyn ChatBackend>) -> Self {
        RemoteTranslator {
            backend,
            prompts: PromptSet::default(),
        }
    }
}

impl Translator for RemoteTranslator {
    fn id(&self) -> &str {
        "remote"
    }

    fn translate(
        &self,
        statement: &str,
        domain: &DomainModel,
        problem: &ProblemModel,
    ) -> Result<TranslationOutcome, TranslateError> {
        let first = ChatRequest {
            stage: Stage::MidLevel,
            input: statement.to_string(),
            prompt: render_prompt(
                &self.prompts.mid_level,
                domain,
                problem,
                &[("feedback", statement)],
            ),
            attempt: 0,
        };
        let mid = self.backend.complete(&first)?.trim().to_string();
        let mid_level = MidLevelConstraint { text: mid.clone() };
        let mut error_note = String::new();
        for attempt in 0..2 {
            let request = ChatRequest {
                stage: Stage::Constraint,
                input: mid.clone(),
                prompt: render_prompt(
                    &self.prompts.constraint,
                    domain,
                    problem,
                    &[("mid_level", &mid), ("error", &error_note)],
                ),
                attempt,
            };
            let reply = self.backend.complete(&request)?;
            match extract_constraints(&reply, domain, problem) {
                Ok(spec) if !spec.is_empty() => {
                    return Ok(TranslationOutcome {
                        mid_level,
                        translation: Translation::Constraints(spec),
                    })
                }
                Ok(_) => error_note =
                    "Your previous answer contained no constraint. Answer with constraints only."
                        .into(),
                Err(e) => error_note = format!("Your previous answer was rejected: {e}. Fix it."),
            }
        }
        Ok(TranslationOutcome {
            mid_level,
            translation: Translation::Failure(error_note),
        })
    }
}
