//! Offline translation by lookup in the archetype table.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{MidLevelConstraint, TranslateError, Translation, TranslationOutcome, Translator};
use crate::corpus::ArchetypeRecord;
use crate::ga::{mutate, ConstraintPool};
use crate::pddl::{parse_specification, DomainModel, ProblemModel};

/// Lowercase, single-spaced, without trailing punctuation.
pub fn normalize(text: &str) -> String {
    let words: Vec<String> = text
        .split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| matches!(c, '.' | ',' | '!' | '?' | ';' | '"' | '\'' | '`'))
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect();
    words.join(" ")
}

/// Matches statements against archetype phrasings and emits the archetype's
/// ground truth. With `error_rate > 0` a deterministic share of statements
/// gets one random mutation applied, standing in for a mistranslation.
#[derive(Debug, Clone)]
pub struct TemplateTranslator {
    records: Vec<ArchetypeRecord>,
    by_text: BTreeMap<String, usize>,
    pub error_rate: f64,
    pub seed: u64,
    /// Duration bound for constraints sampled while injecting errors.
    pub horizon: u64,
}

fn draw(statement: &str, seed: u64) -> (f64, u64) {
    let mut h = Sha256::new();
    h.update(b"inject");
    h.update(seed.to_le_bytes());
    h.update(normalize(statement).as_bytes());
    let d = h.finalize();
    let mut a = [0u8; 8];
    let mut b = [0u8; 8];
    a.copy_from_slice(&d[..8]);
    b.copy_from_slice(&d[8..16]);
    (
        (u64::from_le_bytes(a) >> 11) as f64 / (1u64 << 53) as f64,
        u64::from_le_bytes(b),
    )
}

impl TemplateTranslator {
    pub fn new(records: Vec<ArchetypeRecord>) -> Self {
        let mut by_text = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            for text in r.rephrasings.iter().chain(std::iter::once(&r.template)) {
                by_text.entry(normalize(text)).or_insert(i);
            }
        }
        TemplateTranslator {
            records,
            by_text,
            error_rate: 0.0,
            seed: 0,
            horizon: 10,
        }
    }

    pub fn with_errors(mut self, rate: f64, seed: u64) -> Self {
        self.error_rate = rate;
        self.seed = seed;
        self
    }

    /// Whether the statement would be corrupted under the current settings.
    pub fn injects(&self, statement: &str) -> bool {
        draw(statement, self.seed).0 < self.error_rate
    }

    /// Finds the archetype and slot rebinding for a statement: exact phrasing
    /// first, then templates whose `{slot}` words match problem objects of
    /// the bound object's type.
    fn lookup(
        &self,
        statement: &str,
        domain: &DomainModel,
        problem: &ProblemModel,
    ) -> Option<(usize, BTreeMap<String, String>)> {
        let norm = normalize(statement);
        if let Some(&i) = self.by_text.get(&norm) {
            return Some((i, BTreeMap::new()));
        }
        let words: Vec<&str> = norm.split(' ').collect();
        'records: for (i, r) in self.records.iter().enumerate() {
            let pattern = normalize(&r.template);
            let pwords: Vec<&str> = pattern.split(' ').collect();
            if pwords.len() != words.len() || !pattern.contains('{') {
                continue;
            }
            let mut rebinding = BTreeMap::new();
            for (p, w) in pwords.iter().zip(&words) {
                if let Some(slot) = p.strip_prefix('{').and_then(|s| s.strip_suffix('}')) {
                    let Some(bound) = r.slots.get(slot) else {
                        continue 'records;
                    };
                    let object = problem
                        .objects
                        .iter()
                        .find(|(o, _)| o.eq_ignore_ascii_case(w));
                    let (Some((name, ty)), Some(bound_ty)) =
                        (object, problem.object_type(domain, bound))
                    else {
                        continue 'records;
                    };
                    if ty != bound_ty {
                        continue 'records;
                    }
                    rebinding.insert(bound.clone(), name.clone());
                } else if p != w {
                    continue 'records;
                }
            }
            return Some((i, rebinding));
        }
        None
    }
}

fn rebind(text: &str, rebinding: &BTreeMap<String, String>) -> String {
    if rebinding.is_empty() {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        out.push_str(rebinding.get(word.as_str()).unwrap_or(word));
        word.clear();
    };
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' || c == '-' {
            word.push(c);
        } else {
            flush(&mut word, &mut out);
            out.push(c);
        }
    }
    flush(&mut word, &mut out);
    out
}

impl Translator for TemplateTranslator {
    fn id(&self) -> &str {
        "template"
    }

    fn translate(
        &self,
        statement: &str,
        domain: &DomainModel,
        problem: &ProblemModel,
    ) -> Result<TranslationOutcome, TranslateError> {
        let (i, rebinding) = self
            .lookup(statement, domain, problem)
            .ok_or_else(|| TranslateError::Unmatchable(statement.to_string()))?;
        let record = &self.records[i];
        let mut slots = record.slots.clone();
        for v in slots.values_mut() {
            if let Some(n) = rebinding.get(v) {
                *v = n.clone();
            }
        }
        let mid_level = MidLevelConstraint {
            text: record.render_mid_level(&slots),
        };
        let text: Vec<String> = record
            .ground_truth
            .iter()
            .map(|c| rebind(c, &rebinding))
            .collect();
        let spec = match parse_specification(&text.join("\n"), domain, problem) {
            Ok(s) if !s.is_empty() => s,
            Ok(_) => {
                return Ok(TranslationOutcome {
                    mid_level,
                    translation: Translation::Failure("empty ground truth".into()),
                })
            }
            Err(e) => {
                return Ok(TranslationOutcome {
                    mid_level,
                    translation: Translation::Failure(e.to_string()),
                })
            }
        };
        let (u, stream) = draw(statement, self.seed);
        let spec = if u < self.error_rate {
            let pool = ConstraintPool::enumerate(domain, problem, self.horizon);
            let mut rng = ChaCha8Rng::seed_from_u64(stream);
            mutate(&spec, &pool, &mut rng)
        } else {
            spec
        };
        Ok(TranslationOutcome {
            mid_level,
            translation: Translation::Constraints(spec),
        })
    }
}
