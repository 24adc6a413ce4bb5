//! Feedback statement to constraint translation.
//!
//! Translation runs in two stages: the statement is restated as a
//! mid-level constraint that names problem objects verbatim, and the
//! mid-level text is then turned into PDDL3 constraints. A remote language
//! model can do both stages; a template table keyed by known phrasings does
//! it offline.

mod phrases;
mod remote;
mod template;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{DomainModel, ProblemModel, Specification};

pub use phrases::PhraseTable;
pub use remote::{
    render_prompt, ChatBackend, ChatRequest, FixtureChat, FixtureEntry, HttpChat, PromptSet,
    RemoteTranslator, Stage, PROMPT_VERSION,
};
pub use template::{normalize, TemplateTranslator};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MidLevelConstraint {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Translation {
    Constraints(Specification),
    Failure(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationOutcome {
    pub mid_level: MidLevelConstraint,
    pub translation: Translation,
}

impl TranslationOutcome {
    pub fn constraints(&self) -> Option<&Specification> {
        match &self.translation {
            Translation::Constraints(s) => Some(s),
            Translation::Failure(_) => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("translation service failure: {0}")]
    Transport(String),
    #[error("no template matches '{0}'")]
    Unmatchable(String),
}

pub trait Translator: Send + Sync {
    fn id(&self) -> &str;

    fn translate(
        &self,
        statement: &str,
        domain: &DomainModel,
        problem: &ProblemModel,
    ) -> Result<TranslationOutcome, TranslateError>;
}
