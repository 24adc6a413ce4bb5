//! Scenario packs, the evaluation corpus and training-data generation.

mod naval;
mod training;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ga::ConstraintPool;
use crate::pddl::{
    parse_domain, parse_problem, parse_specification, DomainModel, ParseError, ProblemModel,
    Specification,
};
use crate::translator::PhraseTable;

pub use naval::{
    debris_name, generate_naval, naval_domain, AssetRoster, DebrisKind, DebrisPlacement,
    NavalScenarioConfig, NAVAL_DOMAIN,
};
pub use training::{
    generate_training_instances, FeedbackInstance, TrainingConfig, TrainingInstance, TrainingLabel,
    TrainingOutput,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid scenario configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown pack '{0}'")]
    UnknownPack(String),
    #[error("pack '{pack}': {message}")]
    CorruptPack { pack: String, message: String },
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Exhausted(String),
    #[error(transparent)]
    Planner(#[from] crate::planner::PlannerError),
}

/// A natural-language constraint pattern with its ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchetypeRecord {
    pub id: String,
    /// Canonical wording; `{slot}` words may be rebound to other objects.
    pub template: String,
    /// Restatement naming problem objects; `{slot}` words are filled in.
    pub mid_level: String,
    /// Constraint texts, conjoined.
    pub ground_truth: Vec<String>,
    pub rephrasings: Vec<String>,
    #[serde(default)]
    pub slots: BTreeMap<String, String>,
    /// Problem the archetype is posed on.
    pub problem: String,
    /// Ground truth was reconstructed from the archetype's wording alone.
    #[serde(default)]
    pub reconstruction: bool,
}

impl ArchetypeRecord {
    pub fn render_mid_level(&self, slots: &BTreeMap<String, String>) -> String {
        let mut out = self.mid_level.clone();
        for (k, v) in slots {
            out = out.replace(&format!("{{{k}}}"), v);
        }
        out
    }

    pub fn ground_truth_spec(
        &self,
        domain: &DomainModel,
        problem: &ProblemModel,
    ) -> Result<Specification, ParseError> {
        parse_specification(&self.ground_truth.join("\n"), domain, problem)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ArchetypeFile {
    #[serde(default)]
    note: String,
    archetypes: Vec<ArchetypeRecord>,
}

#[derive(Debug, Clone)]
pub struct Pack {
    pub name: String,
    pub domain: DomainModel,
    /// Problem id (file stem) and model, sorted by id.
    pub problems: Vec<(String, ProblemModel)>,
    pub archetypes: Vec<ArchetypeRecord>,
    pub phrases: PhraseTable,
    /// Provenance remark carried by the archetype file.
    pub note: String,
}

impl Pack {
    pub fn problem(&self, id: &str) -> Option<&ProblemModel> {
        self.problems.iter().find(|(k, _)| k == id).map(|(_, p)| p)
    }

    /// Every feedback element of the corpus: (archetype index, statement).
    pub fn elements(&self, per_archetype: Option<usize>) -> Vec<(usize, String)> {
        let mut out = Vec::new();
        for (i, a) in self.archetypes.iter().enumerate() {
            let n = per_archetype
                .unwrap_or(a.rephrasings.len())
                .min(a.rephrasings.len());
            out.extend(a.rephrasings[..n].iter().map(|r| (i, r.clone())));
        }
        out
    }
}

struct EmbeddedPack {
    name: &'static str,
    domain: &'static str,
    problems: &'static [(&'static str, &'static str)],
    archetypes: &'static str,
    phrases: &'static str,
}

const EMBEDDED: [EmbeddedPack; 2] = [
    EmbeddedPack {
        name: "naval",
        domain: NAVAL_DOMAIN,
        problems: &[
            ("desk", include_str!("../../packs/naval/problems/desk.pddl")),
            ("mini", include_str!("../../packs/naval/problems/mini.pddl")),
            ("p0", include_str!("../../packs/naval/problems/p0.pddl")),
            ("p1", include_str!("../../packs/naval/problems/p1.pddl")),
            ("p2", include_str!("../../packs/naval/problems/p2.pddl")),
            ("p3", include_str!("../../packs/naval/problems/p3.pddl")),
        ],
        archetypes: include_str!("../../packs/naval/archetypes.json"),
        phrases: include_str!("../../packs/naval/phrases.json"),
    },
    EmbeddedPack {
        name: "satellite",
        domain: include_str!("../../packs/satellite/domain.pddl"),
        problems: &[
            (
                "sat-1",
                include_str!("../../packs/satellite/problems/sat-1.pddl"),
            ),
            (
                "sat-2",
                include_str!("../../packs/satellite/problems/sat-2.pddl"),
            ),
        ],
        archetypes: include_str!("../../packs/satellite/archetypes.json"),
        phrases: include_str!("../../packs/satellite/phrases.json"),
    },
];

pub fn pack_names() -> Vec<&'static str> {
    EMBEDDED.iter().map(|p| p.name).collect()
}

fn assemble(
    name: &str,
    domain: &str,
    problems: Vec<(String, String)>,
    archetypes: &str,
    phrases: &str,
) -> Result<Pack, CorpusError> {
    let corrupt = |message: String| CorpusError::CorruptPack {
        pack: name.to_string(),
        message,
    };
    let domain = parse_domain(domain).map_err(|e| corrupt(format!("domain: {e}")))?;
    let mut models = Vec::new();
    for (id, text) in problems {
        let p = parse_problem(&text, &domain).map_err(|e| corrupt(format!("problem {id}: {e}")))?;
        models.push((id, p));
    }
    models.sort_by(|a, b| a.0.cmp(&b.0));
    let file: ArchetypeFile =
        serde_json::from_str(archetypes).map_err(|e| corrupt(format!("archetypes: {e}")))?;
    let phrases = PhraseTable::from_json(phrases).map_err(|e| corrupt(format!("phrases: {e}")))?;
    let pack = Pack {
        name: name.to_string(),
        domain,
        problems: models,
        archetypes: file.archetypes,
        phrases,
        note: file.note,
    };
    for a in &pack.archetypes {
        let p = pack.problem(&a.problem).ok_or_else(|| {
            corrupt(format!(
                "archetype {} names unknown problem {}",
                a.id, a.problem
            ))
        })?;
        if a.rephrasings.is_empty() {
            return Err(corrupt(format!("archetype {} has no rephrasings", a.id)));
        }
        let spec = a
            .ground_truth_spec(&pack.domain, p)
            .map_err(|e| corrupt(format!("archetype {}: {e}", a.id)))?;
        if spec.is_empty() {
            return Err(corrupt(format!(
                "archetype {} has an empty ground truth",
                a.id
            )));
        }
    }
    Ok(pack)
}

/// Loads one of the packs bundled with the library.
pub fn load_pack(name: &str) -> Result<Pack, CorpusError> {
    let e = EMBEDDED
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| CorpusError::UnknownPack(name.to_string()))?;
    let problems = e
        .problems
        .iter()
        .map(|(id, t)| (id.to_string(), t.to_string()))
        .collect();
    assemble(e.name, e.domain, problems, e.archetypes, e.phrases)
}

/// Loads a pack laid out as `domain.pddl`, `problems/*.pddl`,
/// `archetypes.json` and `phrases.json` under `dir`.
pub fn load_pack_from(dir: &Path) -> Result<Pack, CorpusError> {
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "pack".into());
    let domain = std::fs::read_to_string(dir.join("domain.pddl"))?;
    let mut problems = Vec::new();
    for entry in std::fs::read_dir(dir.join("problems"))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "pddl") {
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            problems.push((id, std::fs::read_to_string(&path)?));
        }
    }
    let archetypes = std::fs::read_to_string(dir.join("archetypes.json"))?;
    let phrases = std::fs::read_to_string(dir.join("phrases.json"))?;
    assemble(&name, &domain, problems, &archetypes, &phrases)
}

pub fn enumerate_constraints(
    domain: &DomainModel,
    problem: &ProblemModel,
    horizon: u64,
) -> ConstraintPool {
    ConstraintPool::enumerate(domain, problem, horizon)
}
