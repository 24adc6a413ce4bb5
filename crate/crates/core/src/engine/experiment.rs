//! Corpus sweeps comparing the full pipeline against translation alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{EngineError, OracleChoice, TranslatorChoice};
use crate::corpus::Pack;
use crate::ga::{evolve, ConstraintPool, Evaluator, GAConfig};
use crate::oracle::{FeedbackSet, FeedbackStatement};
use crate::par::Workers;
use crate::pddl::{render_specification, DomainModel, Plan, ProblemModel, Specification};
use crate::planner::Planner;
use crate::validator::validate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentMode {
    Full,
    TranslatorOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: ExperimentMode,
    pub oracle: OracleChoice,
    pub translator: TranslatorChoice,
    pub ga: GAConfig,
    pub seed: u64,
    /// Rephrasings used per archetype; all when unset.
    pub per_archetype: Option<usize>,
    /// Duration bound of constraints the search samples.
    pub horizon: u64,
    /// Feedback elements processed concurrently.
    pub width: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: ExperimentMode::Full,
            oracle: OracleChoice::Exact,
            translator: TranslatorChoice::Template {
                error_rate: 0.0,
                seed: 0,
            },
            ga: GAConfig::default(),
            seed: 0,
            per_archetype: None,
            horizon: 10,
            width: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureMode {
    /// No individual reached full adherence under the run's oracle.
    NonConvergence,
    /// The oracle reported full adherence but exact validation disagrees.
    OracleFalsePositive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementResult {
    pub archetype: String,
    pub statement: String,
    pub translation: Option<String>,
    pub translator_valid: bool,
    pub full_valid: Option<bool>,
    pub converged: Option<bool>,
    pub generations: Option<usize>,
    pub failure: Option<FailureMode>,
    pub plan_length: Option<usize>,
    /// Why the element could not be processed normally.
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchetypeCounts {
    pub id: String,
    pub template: String,
    pub elements: usize,
    pub full_valid: usize,
    pub full_invalid: usize,
    pub translator_valid: usize,
    pub translator_invalid: usize,
    pub non_convergence: usize,
    pub oracle_false_positive: usize,
}

/// Translator-only validity (rows) against full-pipeline validity (columns).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossTable {
    pub translator_valid_full_valid: usize,
    pub translator_valid_full_invalid: usize,
    pub translator_invalid_full_valid: usize,
    pub translator_invalid_full_invalid: usize,
}

impl CrossTable {
    pub fn total(&self) -> usize {
        self.translator_valid_full_valid
            + self.translator_valid_full_invalid
            + self.translator_invalid_full_valid
            + self.translator_invalid_full_invalid
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCounts {
    pub non_convergence: usize,
    pub oracle_false_positive: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub pack: String,
    pub mode: ExperimentMode,
    pub oracle: String,
    pub translator: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub planner: String,
    pub elements: Vec<ElementResult>,
    pub archetypes: Vec<ArchetypeCounts>,
    pub cross: Option<CrossTable>,
    pub failures: FailureCounts,
    /// Genetic searches started; zero in translator-only mode.
    pub ga_runs: usize,
}

impl ExperimentReport {
    pub fn translator_valid_rate(&self) -> f64 {
        rate(
            self.elements.iter().filter(|e| e.translator_valid).count(),
            self.elements.len(),
        )
    }

    pub fn full_valid_rate(&self) -> Option<f64> {
        (self.mode == ExperimentMode::Full).then(|| {
            rate(
                self.elements
                    .iter()
                    .filter(|e| e.full_valid == Some(true))
                    .count(),
                self.elements.len(),
            )
        })
    }

    /// Cell and row sums agree with the element list.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.elements.len();
        if let Some(c) = &self.cross {
            if c.total() != n {
                return Err(format!(
                    "cross table sums to {} over {n} elements",
                    c.total()
                ));
            }
        }
        let per: usize = self.archetypes.iter().map(|a| a.elements).sum();
        if per != n {
            return Err(format!("archetype rows sum to {per} over {n} elements"));
        }
        for a in &self.archetypes {
            if a.translator_valid + a.translator_invalid != a.elements {
                return Err(format!("archetype {}: translator counts do not sum", a.id));
            }
            if self.mode == ExperimentMode::Full && a.full_valid + a.full_invalid != a.elements {
                return Err(format!("archetype {}: full counts do not sum", a.id));
            }
            if a.non_convergence + a.oracle_false_positive > a.full_invalid {
                return Err(format!(
                    "archetype {}: more failures than invalid plans",
                    a.id
                ));
            }
        }
        let f = self.failures;
        let row_f: usize = self
            .archetypes
            .iter()
            .map(|a| a.non_convergence + a.oracle_false_positive)
            .sum();
        if f.non_convergence + f.oracle_false_positive != row_f {
            return Err("failure totals disagree with archetype rows".into());
        }
        Ok(())
    }

    /// Plain-text tables for terminals.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "pack {}  mode {:?}  oracle {}  translator {}  seed {}",
            self.pack, self.mode, self.oracle, self.translator, self.seed
        );
        let _ = writeln!(
            out,
            "\n{:<60} {:>6} {:>8} {:>6} {:>8}",
            "archetype", "full+", "full-", "tr+", "tr-"
        );
        for a in &self.archetypes {
            let mut name = a.template.clone();
            if name.len() > 58 {
                name.truncate(55);
                name.push_str("...");
            }
            let _ = writeln!(
                out,
                "{:<60} {:>6} {:>8} {:>6} {:>8}",
                name, a.full_valid, a.full_invalid, a.translator_valid, a.translator_invalid
            );
        }
        let _ = writeln!(
            out,
            "\ntranslator-only valid rate {:.2}%",
            100.0 * self.translator_valid_rate()
        );
        if let Some(r) = self.full_valid_rate() {
            let _ = writeln!(out, "full pipeline valid rate    {:.2}%", 100.0 * r);
        }
        if let Some(c) = &self.cross {
            let _ = writeln!(
                out,
                "\n{:<22} {:>12} {:>14}",
                "", "full valid", "full invalid"
            );
            let _ = writeln!(
                out,
                "{:<22} {:>12} {:>14}",
                "translator valid", c.translator_valid_full_valid, c.translator_valid_full_invalid
            );
            let _ = writeln!(
                out,
                "{:<22} {:>12} {:>14}",
                "translator invalid",
                c.translator_invalid_full_valid,
                c.translator_invalid_full_invalid
            );
            let _ = writeln!(
                out,
                "\nfailures: non-convergence {}  oracle false positive {}",
                self.failures.non_convergence, self.failures.oracle_false_positive
            );
        }
        out
    }
}

fn rate(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        k as f64 / n as f64
    }
}

fn plan_is_valid(
    domain: &DomainModel,
    problem: &ProblemModel,
    plan: Option<&Plan>,
    truth: &Specification,
) -> bool {
    plan.is_some_and(|p| validate(domain, problem, p, truth).is_ok_and(|r| r.is_valid()))
}

struct Element<'a> {
    index: usize,
    archetype: usize,
    statement: &'a str,
}

/// Plans for every feedback element of the pack and judges the result
/// against the archetype's ground truth with the exact validator.
/// Per-element errors are recorded, never fatal.
pub fn run_experiment(
    pack: &Pack,
    planner: &dyn Planner,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport, EngineError> {
    cfg.ga.check()?;
    let translator = cfg.translator.build(pack, cfg.horizon)?;
    let domain = Arc::new(pack.domain.clone());
    let problems: BTreeMap<&str, Arc<ProblemModel>> = pack
        .problems
        .iter()
        .map(|(k, p)| (k.as_str(), Arc::new(p.clone())))
        .collect();
    let pools: BTreeMap<&str, ConstraintPool> = pack
        .problems
        .iter()
        .map(|(k, p)| {
            (
                k.as_str(),
                ConstraintPool::enumerate(&pack.domain, p, cfg.horizon),
            )
        })
        .collect();
    let raw = pack.elements(cfg.per_archetype);
    let elements: Vec<Element<'_>> = raw
        .iter()
        .enumerate()
        .map(|(index, (archetype, statement))| Element {
            index,
            archetype: *archetype,
            statement,
        })
        .collect();
    let ga_runs = AtomicUsize::new(0);

    let process = |e: &Element<'_>| -> ElementResult {
        let record = &pack.archetypes[e.archetype];
        let mut out = ElementResult {
            archetype: record.id.clone(),
            statement: e.statement.to_string(),
            translation: None,
            translator_valid: false,
            full_valid: (cfg.mode == ExperimentMode::Full).then_some(false),
            converged: None,
            generations: None,
            failure: None,
            plan_length: None,
            reason: None,
        };
        let (Some(problem), Some(pool)) = (
            problems.get(record.problem.as_str()),
            pools.get(record.problem.as_str()),
        ) else {
            out.reason = Some(format!("unknown problem {}", record.problem));
            return out;
        };
        let truth = match record.ground_truth_spec(&domain, problem) {
            Ok(t) => t,
            Err(e) => {
                out.reason = Some(e.to_string());
                return out;
            }
        };
        let translated = match translator.translate(e.statement, &domain, problem) {
            Ok(t) => match t.constraints() {
                Some(c) => c.clone(),
                None => {
                    out.reason = Some(format!("translation failed: {:?}", t.translation));
                    return out;
                }
            },
            Err(err) => {
                out.reason = Some(err.to_string());
                return out;
            }
        };
        out.translation = Some(render_specification(&translated));

        match planner.plan(&domain, problem, &translated) {
            Ok(r) => {
                out.translator_valid = plan_is_valid(&domain, problem, r.outcome.plan(), &truth)
            }
            Err(err) => out.reason = Some(err.to_string()),
        }
        if cfg.mode == ExperimentMode::TranslatorOnly {
            return out;
        }

        ga_runs.fetch_add(1, Ordering::Relaxed);
        let feedback = match FeedbackSet::new(vec![FeedbackStatement::new(
            e.statement,
            Some(truth.clone()),
        )]) {
            Ok(f) => f,
            Err(err) => {
                out.reason = Some(err.to_string());
                return out;
            }
        };
        let oracle = cfg.oracle.build(pack, domain.clone(), problem.clone());
        let evaluator = Evaluator::new(&domain, problem, planner, oracle.as_ref(), &feedback);
        let ga = GAConfig {
            seed: cfg
                .seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(e.index as u64),
            width: 1,
            ..cfg.ga.clone()
        };
        match evolve(&translated, pool, &evaluator, &ga, None) {
            Ok(r) => {
                let valid = plan_is_valid(&domain, problem, r.best.plan(), &truth);
                let converged = r.reached_full_adherence();
                out.full_valid = Some(valid);
                out.converged = Some(converged);
                out.generations = Some(r.history.len() - 1);
                out.plan_length = r.best.plan().map(Plan::len);
                // non-convergence takes precedence: without a fully adherent
                // individual there is no positive verdict to be wrong about
                out.failure = match (valid, converged) {
                    (true, _) => None,
                    (false, false) => Some(FailureMode::NonConvergence),
                    (false, true) => Some(FailureMode::OracleFalsePositive),
                };
            }
            Err(err) => out.reason = Some(err.to_string()),
        }
        out
    };
    let results = Workers::new(cfg.width).map(&elements, process);

    let mut archetypes: Vec<ArchetypeCounts> = pack
        .archetypes
        .iter()
        .map(|a| ArchetypeCounts {
            id: a.id.clone(),
            template: a.template.clone(),
            ..ArchetypeCounts::default()
        })
        .collect();
    let mut cross = CrossTable::default();
    let mut failures = FailureCounts::default();
    for (e, r) in elements.iter().zip(&results) {
        let a = &mut archetypes[e.archetype];
        a.elements += 1;
        if r.translator_valid {
            a.translator_valid += 1;
        } else {
            a.translator_invalid += 1;
        }
        if let Some(full) = r.full_valid {
            if full {
                a.full_valid += 1;
            } else {
                a.full_invalid += 1;
            }
            match (r.translator_valid, full) {
                (true, true) => cross.translator_valid_full_valid += 1,
                (true, false) => cross.translator_valid_full_invalid += 1,
                (false, true) => cross.translator_invalid_full_valid += 1,
                (false, false) => cross.translator_invalid_full_invalid += 1,
            }
        }
        match r.failure {
            Some(FailureMode::NonConvergence) => {
                a.non_convergence += 1;
                failures.non_convergence += 1;
            }
            Some(FailureMode::OracleFalsePositive) => {
                a.oracle_false_positive += 1;
                failures.oracle_false_positive += 1;
            }
            None => {}
        }
    }

    Ok(ExperimentReport {
        pack: pack.name.clone(),
        mode: cfg.mode,
        oracle: cfg.oracle.label(),
        translator: cfg.translator.label(),
        seed: cfg.seed,
        config: cfg.clone(),
        planner: planner.id().to_string(),
        elements: results,
        archetypes,
        cross: (cfg.mode == ExperimentMode::Full).then_some(cross),
        failures,
        ga_runs: ga_runs.into_inner(),
    })
}
