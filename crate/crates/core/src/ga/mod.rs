//! Genetic search over specifications.
//!
//! A genotype is a list of atomic constraints; its phenotype is the plan the
//! planner produces with those constraints conjoined to the problem; its
//! fitness is the oracle's adherence rate for that plan against the user's
//! feedback.

mod operators;
mod pool;

use std::collections::HashMap;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{AdherenceOracle, FeedbackSet, OracleError};
use crate::par::Workers;
use crate::pddl::{DomainModel, Plan, ProblemModel, Specification};
use crate::planner::{PlanOutcome, Planner, PlannerError};

pub use operators::{crossover, crossover_at, mutate, mutate_tagged, MutationOptions, MutationTag};
pub use pool::ConstraintPool;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GAConfig {
    pub population_size: usize,
    /// Generations bred after the initial one.
    pub max_generations: usize,
    pub elite_fraction: f64,
    /// Chance that a crossover child is also mutated.
    pub mutation_probability: f64,
    pub seed: u64,
    /// Concurrent fitness evaluations; 1 is sequential, 0 uses every core.
    pub width: usize,
    #[serde(skip)]
    pub mutation: MutationOptions,
}

impl Default for GAConfig {
    fn default() -> Self {
        GAConfig {
            population_size: 20,
            max_generations: 3,
            elite_fraction: 0.5,
            mutation_probability: 0.5,
            seed: 0,
            width: 1,
            mutation: MutationOptions::default(),
        }
    }
}

impl GAConfig {
    pub fn check(&self) -> Result<(), GaError> {
        if self.population_size < 2 {
            return Err(GaError::Config("population size must be at least 2".into()));
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction < 1.0) {
            return Err(GaError::Config(
                "elite fraction must lie strictly between 0 and 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_probability) {
            return Err(GaError::Config(
                "mutation probability must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn elite_count(&self) -> usize {
        ((self.elite_fraction * self.population_size as f64).ceil() as usize)
            .clamp(1, self.population_size)
    }
}

#[derive(Debug, Error)]
pub enum GaError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("the initial specification is empty")]
    EmptyInitial,
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub outcome: PlanOutcome,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genotype: Specification,
    /// How the genotype came about, e.g. `seed`, `mutate:negate`, `crossover`.
    pub lineage: String,
    pub evaluation: Option<Evaluation>,
}

impl Individual {
    pub fn new(genotype: Specification, lineage: impl Into<String>) -> Self {
        Individual {
            genotype,
            lineage: lineage.into(),
            evaluation: None,
        }
    }

    pub fn fitness(&self) -> f64 {
        self.evaluation.as_ref().map_or(0.0, |e| e.fitness)
    }

    pub fn plan(&self) -> Option<&Plan> {
        self.evaluation.as_ref().and_then(|e| e.outcome.plan())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub generation: usize,
    pub members: Vec<Individual>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_genotype: String,
    /// Cumulative planner invocations.
    pub planner_calls: usize,
    /// Cumulative memoized lookups.
    pub memo_hits: usize,
}

/// One line of the generations log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub generation: usize,
    pub genotype: String,
    pub fitness: f64,
    pub outcome: String,
    pub plan_length: Option<usize>,
    pub lineage: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveResult {
    pub best: Individual,
    pub history: Vec<GenerationStats>,
    pub log: Vec<LogRecord>,
    pub final_population: Population,
}

impl EvolveResult {
    pub fn reached_full_adherence(&self) -> bool {
        self.best.fitness() >= 1.0
    }
}

pub fn write_log(records: &[LogRecord], mut out: impl Write) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Fitness evaluation with memoization by canonical genotype text.
pub struct Evaluator<'a> {
    pub domain: &'a DomainModel,
    pub problem: &'a ProblemModel,
    pub planner: &'a dyn Planner,
    pub oracle: &'a dyn AdherenceOracle,
    pub feedback: &'a FeedbackSet,
    memo: Mutex<HashMap<String, Evaluation>>,
    calls: AtomicUsize,
    hits: AtomicUsize,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        domain: &'a DomainModel,
        problem: &'a ProblemModel,
        planner: &'a dyn Planner,
        oracle: &'a dyn AdherenceOracle,
        feedback: &'a FeedbackSet,
    ) -> Self {
        Evaluator {
            domain,
            problem,
            planner,
            oracle,
            feedback,
            memo: Mutex::new(HashMap::new()),
            calls: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
        }
    }

    pub fn planner_calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn memo_hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    fn compute(&self, genotype: &Specification) -> Result<Evaluation, GaError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let result = self.planner.plan(self.domain, self.problem, genotype)?;
        let fitness = self.oracle.rate(result.outcome.plan(), self.feedback)?;
        Ok(Evaluation {
            outcome: result.outcome,
            fitness,
        })
    }

    pub fn evaluate(&self, genotype: &Specification) -> Result<Evaluation, GaError> {
        Ok(self
            .evaluate_batch(std::slice::from_ref(genotype), &Workers::sequential())?
            .remove(0))
    }

    /// Evaluates a batch; each distinct unseen genotype reaches the planner
    /// once, in parallel, and results are returned in input order.
    pub fn evaluate_batch(
        &self,
        genotypes: &[Specification],
        workers: &Workers,
    ) -> Result<Vec<Evaluation>, GaError> {
        let keys: Vec<String> = genotypes.iter().map(Specification::canonical).collect();
        let mut fresh: Vec<(String, &Specification)> = Vec::new();
        {
            let memo = self.memo.lock().unwrap_or_else(|e| e.into_inner());
            for (k, g) in keys.iter().zip(genotypes) {
                if !memo.contains_key(k) && !fresh.iter().any(|(f, _)| f == k) {
                    fresh.push((k.clone(), g));
                }
            }
        }
        let results = workers.map(&fresh, |(_, g)| self.compute(g));
        let mut memo = self.memo.lock().unwrap_or_else(|e| e.into_inner());
        for ((k, _), r) in fresh.iter().zip(results) {
            memo.insert(k.clone(), r?);
        }
        let hits = keys.len() - fresh.len();
        self.hits.fetch_add(hits, Ordering::Relaxed);
        Ok(keys.iter().map(|k| memo[k].clone()).collect())
    }
}

pub fn evaluate(mut ind: Individual, evaluator: &Evaluator<'_>) -> Result<Individual, GaError> {
    ind.evaluation = Some(evaluator.evaluate(&ind.genotype)?);
    Ok(ind)
}

/// Ranking used for elites and for the overall best: higher fitness, then
/// having a plan at all, then fewer constraints, then canonical text.
fn rank(a: &Individual, b: &Individual) -> std::cmp::Ordering {
    b.fitness()
        .total_cmp(&a.fitness())
        .then(b.plan().is_some().cmp(&a.plan().is_some()))
        .then(a.genotype.len().cmp(&b.genotype.len()))
        .then_with(|| a.genotype.canonical().cmp(&b.genotype.canonical()))
}

fn roulette<'p>(members: &'p [Individual], rng: &mut impl Rng) -> &'p Individual {
    let total: f64 = members.iter().map(Individual::fitness).sum();
    if total <= 0.0 {
        return &members[rng.random_range(0..members.len())];
    }
    let mut x = rng.random::<f64>() * total;
    for m in members {
        x -= m.fitness();
        if x < 0.0 {
            return m;
        }
    }
    members.last().expect("population is non-empty")
}

fn stats(generation: usize, members: &[Individual], ev: &Evaluator<'_>) -> GenerationStats {
    let best = members
        .iter()
        .min_by(|a, b| rank(a, b))
        .expect("population is non-empty");
    GenerationStats {
        generation,
        best_fitness: best.fitness(),
        mean_fitness: members.iter().map(Individual::fitness).sum::<f64>() / members.len() as f64,
        best_genotype: best.genotype.canonical(),
        planner_calls: ev.planner_calls(),
        memo_hits: ev.memo_hits(),
    }
}

fn log_records(generation: usize, members: &[Individual]) -> impl Iterator<Item = LogRecord> + '_ {
    members.iter().map(move |m| LogRecord {
        generation,
        genotype: m.genotype.canonical(),
        fitness: m.fitness(),
        outcome: m
            .evaluation
            .as_ref()
            .map_or("pending", |e| e.outcome.label())
            .to_string(),
        plan_length: m.plan().map(Plan::len),
        lineage: m.lineage.clone(),
    })
}

fn evaluate_all(
    members: &mut [Individual],
    ev: &Evaluator<'_>,
    workers: &Workers,
) -> Result<(), GaError> {
    let genotypes: Vec<Specification> = members.iter().map(|m| m.genotype.clone()).collect();
    for (m, e) in members
        .iter_mut()
        .zip(ev.evaluate_batch(&genotypes, workers)?)
    {
        m.evaluation = Some(e);
    }
    Ok(())
}

/// Runs the search from `initial`. Operator randomness is drawn on the
/// calling thread in a fixed order, so the result does not depend on the
/// evaluation width.
pub fn evolve(
    initial: &Specification,
    pool: &ConstraintPool,
    evaluator: &Evaluator<'_>,
    cfg: &GAConfig,
    observer: Option<&(dyn Fn(&GenerationStats) + Sync)>,
) -> Result<EvolveResult, GaError> {
    cfg.check()?;
    if initial.is_empty() {
        return Err(GaError::EmptyInitial);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let workers = Workers::new(cfg.width);
    let m = cfg.population_size;

    let mut members = vec![Individual::new(initial.clone(), "seed")];
    while members.len() < m {
        let (g, tag) = mutate_tagged(initial, pool, &mut rng, cfg.mutation);
        members.push(Individual::new(g, format!("mutate:{}", tag.as_str())));
    }
    evaluate_all(&mut members, evaluator, &workers)?;

    let mut history = vec![stats(0, &members, evaluator)];
    let mut log: Vec<LogRecord> = log_records(0, &members).collect();
    if let Some(f) = observer {
        f(&history[0]);
    }
    let mut best = members
        .iter()
        .min_by(|a, b| rank(a, b))
        .cloned()
        .expect("population is non-empty");
    let mut generation = 0;

    while best.fitness() < 1.0 && generation < cfg.max_generations {
        generation += 1;
        members.sort_by(rank);
        let mut next: Vec<Individual> = members[..cfg.elite_count()]
            .iter()
            .map(|e| Individual {
                lineage: "elite".into(),
                ..e.clone()
            })
            .collect();
        while next.len() < m {
            let a = roulette(&members, &mut rng);
            let b = roulette(&members, &mut rng);
            let (c1, c2) = crossover(&a.genotype, &b.genotype, &mut rng);
            for child in [c1, c2] {
                if next.len() == m {
                    break;
                }
                let ind = if rng.random_bool(cfg.mutation_probability) {
                    let (g, tag) = mutate_tagged(&child, pool, &mut rng, cfg.mutation);
                    Individual::new(g, format!("crossover+mutate:{}", tag.as_str()))
                } else {
                    Individual::new(child, "crossover")
                };
                next.push(ind);
            }
        }
        evaluate_all(&mut next, evaluator, &workers)?;
        members = next;
        let s = stats(generation, &members, evaluator);
        if let Some(f) = observer {
            f(&s);
        }
        history.push(s);
        log.extend(log_records(generation, &members));
        let gen_best = members
            .iter()
            .min_by(|a, b| rank(a, b))
            .expect("population is non-empty");
        if rank(gen_best, &best).is_lt() {
            best = gen_best.clone();
        }
    }

    Ok(EvolveResult {
        best,
        history,
        log,
        final_population: Population {
            generation,
            members,
        },
    })
}
