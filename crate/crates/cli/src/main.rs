use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use plancritic_cli::options::{
    build_planner, parse_oracle, parse_translator, resolve_pack, OptionError, PlannerOptions,
};
use plancritic_cli::service;
use plancritic_core::corpus::{
    generate_naval, generate_training_instances, CorpusError, NavalScenarioConfig, Pack,
    TrainingConfig,
};
use plancritic_core::engine::{
    run_experiment, Engine, EngineError, ExperimentConfig, ExperimentMode, OracleChoice,
    TranslatorChoice,
};
use plancritic_core::ga::GAConfig;
use plancritic_core::pddl::{
    parse_domain, parse_plan, parse_problem, parse_specification, render_domain, render_plan,
    render_problem, render_specification, ParseError, Specification,
};
use plancritic_core::planner::{PlanOutcome, Planner, PlannerError};
use plancritic_core::validator::{validate, SimulateError};

#[derive(Debug, Parser)]
#[command(
    name = "plancritic",
    version,
    about = "Refine symbolic plans from natural-language feedback"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Bundled pack name or pack directory.
    #[arg(long, global = true, default_value = "naval")]
    pack: String,
    /// builtin | external
    #[arg(long, global = true, default_value = "builtin")]
    engine: String,
    /// exact | noisy[:RATE|:FP,FN] | remote:URL
    #[arg(long, global = true, default_value = "exact")]
    oracle: String,
    /// template[:ERROR_RATE] | fixture:PATH | remote:URL
    #[arg(long, global = true, default_value = "template")]
    translator: String,
    /// Machine-readable JSON report destination.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Argv template of an external planner, e.g. "optic {domain} {problem}".
    #[arg(long, global = true)]
    planner_cmd: Option<String>,
    /// Planner timeout in seconds.
    #[arg(long, global = true)]
    planner_timeout: Option<f64>,
    /// Depth limit of the built-in search.
    #[arg(long, global = true, default_value_t = 24)]
    plan_horizon: usize,
    /// Concurrent external planner processes.
    #[arg(long, global = true, default_value_t = 4)]
    planner_workers: usize,
    /// Model name sent to a remote translator.
    #[arg(long, global = true, default_value = "gpt-4")]
    model: String,
    /// Environment variable holding the remote auth token.
    #[arg(long, global = true, default_value = "PLANCRITIC_TOKEN")]
    token_env: String,
    /// Remote call timeout in seconds.
    #[arg(long, global = true, default_value_t = 30)]
    remote_timeout: u64,
    /// Duration bound of constraints sampled by the search.
    #[arg(long, global = true, default_value_t = 10)]
    horizon: u64,
    #[arg(long, global = true, default_value_t = 20)]
    population: usize,
    #[arg(long, global = true, default_value_t = 3)]
    generations: usize,
    /// Concurrent evaluations; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    width: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a plan against its goal and extra constraints.
    Validate {
        domain: PathBuf,
        problem: PathBuf,
        plan: PathBuf,
        #[arg(long)]
        constraints: Option<PathBuf>,
    },
    /// Plan for a problem, optionally under extra constraints.
    Plan {
        domain: PathBuf,
        problem: PathBuf,
        #[arg(long)]
        constraints: Option<PathBuf>,
    },
    /// Refine a pack problem's plan from feedback statements.
    Evolve {
        #[arg(long, default_value = "mini")]
        problem: String,
        /// One feedback statement; repeat for several.
        #[arg(long = "feedback", required = true)]
        feedback: Vec<String>,
    },
    /// Scenario generation, corpus listing and training data.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
    /// Run the evaluation sweep over the pack's feedback corpus.
    Experiment {
        #[arg(long, value_enum, default_value_t = Mode::Both)]
        mode: Mode,
        /// Rephrasings per archetype; all when unset.
        #[arg(long)]
        per_archetype: Option<usize>,
    },
    /// Serve the session HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

#[derive(Debug, Subcommand)]
enum CorpusAction {
    /// List the feedback elements of the pack.
    List,
    /// Write a naval domain and problem.
    Generate {
        #[arg(long, value_enum, default_value_t = Scenario::Desk)]
        scenario: Scenario,
        /// JSON scenario description; overrides --scenario.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write labelled plan/statement pairs as JSON lines.
    Training {
        /// Problem ids of the pack; all when unset.
        #[arg(long, value_delimiter = ',')]
        problems: Vec<String>,
        #[arg(long, default_value_t = 20)]
        per_problem: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Full,
    TranslatorOnly,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scenario {
    Mini,
    Desk,
    Variation,
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Option(#[from] OptionError),
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{0}")]
    Failed(String),
}

/// Successful runs that still report a negative result exit with 1.
enum Verdict {
    Ok,
    Negative,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn parsed<T>(path: &Path, r: Result<T, ParseError>) -> Result<T, CliError> {
    r.map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn write_report(g: &Global, value: &impl Serialize) -> Result<(), CliError> {
    if let Some(path) = &g.report {
        fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    }
    Ok(())
}

fn planner(g: &Global) -> Result<Arc<dyn Planner>, CliError> {
    Ok(build_planner(&PlannerOptions {
        engine: g.engine.clone(),
        horizon: g.plan_horizon,
        timeout: g.planner_timeout.map(Duration::from_secs_f64),
        command: g.planner_cmd.clone(),
        workers: g.planner_workers,
    })?)
}

fn oracle(g: &Global) -> Result<OracleChoice, CliError> {
    Ok(parse_oracle(
        &g.oracle,
        g.seed,
        &g.token_env,
        Duration::from_secs(g.remote_timeout),
    )?)
}

fn translator(g: &Global) -> Result<TranslatorChoice, CliError> {
    Ok(parse_translator(
        &g.translator,
        g.seed,
        &g.model,
        &g.token_env,
        Duration::from_secs(g.remote_timeout),
    )?)
}

fn ga_config(g: &Global, width: usize) -> GAConfig {
    GAConfig {
        population_size: g.population,
        max_generations: g.generations,
        seed: g.seed,
        width,
        ..GAConfig::default()
    }
}

fn engine(g: &Global, pack: Pack) -> Result<Engine, CliError> {
    let mut e = Engine::new(planner(g)?, [pack]);
    e.oracle = oracle(g)?;
    e.translator = translator(g)?;
    e.ga = ga_config(g, g.width);
    e.horizon = g.horizon;
    Ok(e)
}

fn load_files(
    domain: &Path,
    problem: &Path,
    constraints: Option<&Path>,
) -> Result<
    (
        plancritic_core::pddl::DomainModel,
        plancritic_core::pddl::ProblemModel,
        Specification,
    ),
    CliError,
> {
    let d = parsed(domain, parse_domain(&read(domain)?))?;
    let p = parsed(problem, parse_problem(&read(problem)?, &d))?;
    let spec = match constraints {
        Some(path) => parsed(path, parse_specification(&read(path)?, &d, &p))?,
        None => Specification::default(),
    };
    Ok((d, p, spec))
}

#[derive(Serialize)]
struct ValidateReport {
    goal_satisfied: bool,
    constraints: Vec<ConstraintLine>,
    adherence_rate: f64,
    valid: bool,
}

#[derive(Serialize)]
struct ConstraintLine {
    index: usize,
    constraint: String,
    holds: bool,
}

fn cmd_validate(
    g: &Global,
    domain: &Path,
    problem: &Path,
    plan: &Path,
    constraints: Option<&Path>,
) -> Result<Verdict, CliError> {
    let (d, p, spec) = load_files(domain, problem, constraints)?;
    let plan_model = parsed(plan, parse_plan(&read(plan)?, &d))?;
    let report = validate(&d, &p, &plan_model, &spec)?;
    print!("{}", report.to_lines());
    eprintln!(
        "goal {}",
        if report.goal_satisfied {
            "satisfied"
        } else {
            "not satisfied"
        }
    );
    write_report(
        g,
        &ValidateReport {
            goal_satisfied: report.goal_satisfied,
            constraints: report
                .per_constraint
                .iter()
                .enumerate()
                .map(|(index, (c, holds))| ConstraintLine {
                    index,
                    constraint: c.to_string(),
                    holds: *holds,
                })
                .collect(),
            adherence_rate: report.adherence_rate,
            valid: report.is_valid(),
        },
    )?;
    Ok(if report.is_valid() {
        Verdict::Ok
    } else {
        Verdict::Negative
    })
}

fn cmd_plan(
    g: &Global,
    domain: &Path,
    problem: &Path,
    constraints: Option<&Path>,
) -> Result<Verdict, CliError> {
    let (d, p, spec) = load_files(domain, problem, constraints)?;
    let result = planner(g)?.plan(&d, &p, &spec)?;
    eprintln!(
        "{} by {} in {:.3}s",
        result.outcome.label(),
        result.planner_id,
        result.wall_time.as_secs_f64()
    );
    write_report(g, &result)?;
    match &result.outcome {
        PlanOutcome::Solved(plan) => {
            print!("{}", render_plan(plan));
            Ok(Verdict::Ok)
        }
        _ => {
            println!("{}", result.outcome.label());
            Ok(Verdict::Negative)
        }
    }
}

fn cmd_evolve(g: &Global, problem: &str, feedback: &[String]) -> Result<Verdict, CliError> {
    let engine = engine(g, resolve_pack(&g.pack)?)?;
    let handle = engine.create_session(&engine.pack_names()[0], problem)?;
    engine.refine(&handle, feedback)?;
    let view = handle.view();
    let session = &view.session;
    if let Some(reason) = &session.failure {
        return Err(CliError::Failed(reason.clone()));
    }
    for f in &session.feedback {
        let c = f.constraints.as_ref().map_or_else(
            || format!("untranslated: {}", f.error.clone().unwrap_or_default()),
            render_specification,
        );
        println!("feedback: {}\n  -> {c}", f.text);
    }
    if let Some(run) = session.runs.last() {
        for s in &run.generations {
            println!(
                "generation {:>2}  best {:.3}  mean {:.3}  {}",
                s.generation, s.best_fitness, s.mean_fitness, s.best_genotype
            );
        }
    }
    match session.current_plan() {
        Some(plan) => print!("plan:\n{}", render_plan(plan)),
        None => println!("plan: none"),
    }
    for j in &session.judgments {
        println!(
            "{}\t{}",
            if j.adheres { "adheres" } else { "violates" },
            j.statement
        );
    }
    write_report(g, &view)?;
    Ok(if session.judgments.iter().all(|j| j.adheres) {
        Verdict::Ok
    } else {
        Verdict::Negative
    })
}

fn cmd_corpus(g: &Global, action: &CorpusAction) -> Result<Verdict, CliError> {
    match action {
        CorpusAction::List => {
            let pack = resolve_pack(&g.pack)?;
            let mut out = std::io::stdout().lock();
            for (i, (a, text)) in pack.elements(None).iter().enumerate() {
                writeln!(out, "{i}\t{}\t{text}", pack.archetypes[*a].id)?;
            }
        }
        CorpusAction::Generate {
            scenario,
            config,
            out,
        } => {
            let cfg = match config {
                Some(path) => serde_json::from_str(&read(path)?)?,
                None => match scenario {
                    Scenario::Mini => NavalScenarioConfig::mini(),
                    Scenario::Desk => NavalScenarioConfig::desk(),
                    Scenario::Variation => NavalScenarioConfig::variation(g.seed),
                },
            };
            let (d, p) = generate_naval(&cfg)?;
            fs::create_dir_all(out)?;
            fs::write(out.join("domain.pddl"), render_domain(&d))?;
            fs::write(
                out.join(format!("{}.pddl", cfg.name)),
                render_problem(&p, None),
            )?;
            println!(
                "wrote {} and {}",
                out.join("domain.pddl").display(),
                out.join(format!("{}.pddl", cfg.name)).display()
            );
        }
        CorpusAction::Training {
            problems,
            per_problem,
            out,
        } => {
            let pack = resolve_pack(&g.pack)?;
            let chosen: Vec<(String, plancritic_core::pddl::ProblemModel)> = if problems.is_empty()
            {
                pack.problems.clone()
            } else {
                problems
                    .iter()
                    .map(|id| {
                        pack.problem(id)
                            .map(|p| (id.clone(), p.clone()))
                            .ok_or_else(|| {
                                CliError::Failed(format!(
                                    "pack '{}' has no problem '{id}'",
                                    pack.name
                                ))
                            })
                    })
                    .collect::<Result<_, _>>()?
            };
            let cfg = TrainingConfig {
                per_problem: *per_problem,
                horizon: g.horizon,
                seed: g.seed,
                ..TrainingConfig::default()
            };
            let output =
                generate_training_instances(&pack.domain, &chosen, planner(g)?.as_ref(), &cfg)?;
            let mut file = std::io::BufWriter::new(fs::File::create(out)?);
            output.write_jsonl(&mut file)?;
            println!(
                "{} instances, {} examples -> {}",
                output.instances.len(),
                output.examples().len(),
                out.display()
            );
            for (id, why) in &output.exhausted {
                eprintln!("exhausted {id}: {why}");
            }
            if !output.exhausted.is_empty() {
                return Ok(Verdict::Negative);
            }
        }
    }
    Ok(Verdict::Ok)
}

fn cmd_experiment(
    g: &Global,
    mode: Mode,
    per_archetype: Option<usize>,
) -> Result<Verdict, CliError> {
    let pack = resolve_pack(&g.pack)?;
    let planner = planner(g)?;
    let modes: &[ExperimentMode] = match mode {
        Mode::Full => &[ExperimentMode::Full],
        Mode::TranslatorOnly => &[ExperimentMode::TranslatorOnly],
        Mode::Both => &[ExperimentMode::TranslatorOnly, ExperimentMode::Full],
    };
    let mut reports = Vec::new();
    for m in modes {
        let cfg = ExperimentConfig {
            mode: *m,
            oracle: oracle(g)?,
            translator: translator(g)?,
            ga: ga_config(g, 1),
            seed: g.seed,
            per_archetype,
            horizon: g.horizon,
            width: g.width,
        };
        let report = run_experiment(&pack, planner.as_ref(), &cfg)?;
        println!("{}", report.render_text());
        report.check_invariants().map_err(CliError::Failed)?;
        reports.push(report);
    }
    if reports.len() == 1 {
        write_report(g, &reports[0])?;
    } else {
        write_report(g, &reports)?;
    }
    Ok(Verdict::Ok)
}

fn cmd_serve(g: &Global, addr: &str) -> Result<Verdict, CliError> {
    let engine = engine(g, resolve_pack(&g.pack)?)?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(service::serve(engine, addr))?;
    Ok(Verdict::Ok)
}

fn run(cli: &Cli) -> Result<Verdict, CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Validate {
            domain,
            problem,
            plan,
            constraints,
        } => cmd_validate(g, domain, problem, plan, constraints.as_deref()),
        Command::Plan {
            domain,
            problem,
            constraints,
        } => cmd_plan(g, domain, problem, constraints.as_deref()),
        Command::Evolve { problem, feedback } => cmd_evolve(g, problem, feedback),
        Command::Corpus { action } => cmd_corpus(g, action),
        Command::Experiment {
            mode,
            per_archetype,
        } => cmd_experiment(g, *mode, *per_archetype),
        Command::Serve { addr } => cmd_serve(g, addr),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::Negative) => ExitCode::from(1),
        Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
