//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit when any
//! criterion fails.
//!
//! `PLANCRITIC_FUZZ_SECS` overrides the parser fuzzing budget (300 s by
//! default). The fuzzer runs on its own thread while the other criteria run.

mod support;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use plancritic_core::corpus::{
    generate_training_instances, load_pack, pack_names, ArchetypeRecord, TrainingConfig,
};
use plancritic_core::engine::{
    run_experiment, ExperimentConfig, ExperimentMode, OracleChoice, TranslatorChoice,
};
use plancritic_core::ga::{
    crossover, evolve, mutate, mutate_tagged, write_log, ConstraintPool, Evaluator, GAConfig,
    MutationOptions,
};
use plancritic_core::oracle::{
    AdherenceOracle, ExactOracle, FeedbackSet, FeedbackStatement, NoiseProfile, NoisyOracle,
};
use plancritic_core::pddl::{
    extract_constraints, parse_constraint, parse_domain, parse_plan, parse_problem,
    parse_specification, render_domain, render_problem, render_specification, Atom, Condition,
    ConstraintKind, DomainModel, Plan, ProblemModel, Specification, Time, TrajectoryConstraint,
};
use plancritic_core::planner::{BuiltinPlanner, PlanOutcome, Planner};
use plancritic_core::validator::{
    check_constraint, check_goal, simulate, validate, Snapshot, StateTrajectory,
};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = Box<dyn FnOnce() -> Outcome>;
type Truth = Box<dyn Fn(u8) -> bool>;

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn pack_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("packs")
        .join(name)
}

fn naval(problem: &str) -> (DomainModel, ProblemModel) {
    let pack = load_pack("naval").expect("naval pack loads");
    let p = pack.problem(problem).expect("problem exists").clone();
    (pack.domain.clone(), p)
}

fn builtin(horizon: usize, timeout: Duration) -> BuiltinPlanner {
    BuiltinPlanner {
        horizon,
        timeout,
        ..BuiltinPlanner::default()
    }
}

// ---------------------------------------------------------------- semantics

fn lit(i: usize) -> Atom {
    Atom::new("p", [["a", "b", "c"][i]])
}

fn semantics() -> Outcome {
    let started = Instant::now();
    let mut conds: Vec<(Condition, Truth)> = Vec::new();
    for i in 0..3 {
        conds.push((Condition::Atom(lit(i)), Box::new(move |m| m >> i & 1 == 1)));
        conds.push((
            Condition::not(Condition::Atom(lit(i))),
            Box::new(move |m| m >> i & 1 == 0),
        ));
    }
    conds.push((
        Condition::and(
            Condition::Atom(lit(0)),
            Condition::not(Condition::Atom(lit(1))),
        ),
        Box::new(|m| m & 1 == 1 && m & 2 == 0),
    ));
    conds.push((
        Condition::or(Condition::Atom(lit(1)), Condition::Atom(lit(2))),
        Box::new(|m| m & 6 != 0),
    ));

    let units = [0u64, 1, 2, 3];
    let mut constraints: Vec<(TrajectoryConstraint, usize, usize)> = Vec::new();
    for kind in ConstraintKind::ALL {
        let durs: Vec<Vec<Time>> = match kind.duration_arity() {
            0 => vec![vec![]],
            1 => units.iter().map(|&d| vec![Time::from_units(d)]).collect(),
            _ => units
                .iter()
                .flat_map(|&a| {
                    units
                        .iter()
                        .filter(move |&&b| a < b)
                        .map(move |&b| vec![Time::from_units(a), Time::from_units(b)])
                })
                .collect(),
        };
        let pairs: Vec<(usize, usize)> = if kind.condition_arity() == 2 {
            (0..conds.len())
                .flat_map(|a| (0..conds.len()).map(move |b| (a, b)))
                .collect()
        } else {
            (0..conds.len()).map(|a| (a, a)).collect()
        };
        for d in &durs {
            for &(a, b) in &pairs {
                let cs = if kind.condition_arity() == 2 {
                    vec![conds[a].0.clone(), conds[b].0.clone()]
                } else {
                    vec![conds[a].0.clone()]
                };
                let c =
                    TrajectoryConstraint::from_parts(kind, cs, d.clone()).expect("arity matches");
                constraints.push((c, a, b));
            }
        }
    }

    let mut checks = 0u64;
    let mut mismatches = Vec::new();
    let mut trajectories = 0u64;
    for len in 1..=5u32 {
        for code in 0..8u32.pow(len) {
            trajectories += 1;
            let masks: Vec<u8> = (0..len).map(|i| (code / 8u32.pow(i) % 8) as u8).collect();
            let traj = StateTrajectory {
                snapshots: masks
                    .iter()
                    .enumerate()
                    .map(|(i, &m)| Snapshot {
                        time: Time::from_units(i as u64),
                        state: (0..3)
                            .filter(|b| m >> b & 1 == 1)
                            .map(lit)
                            .collect::<BTreeSet<_>>(),
                    })
                    .collect(),
            };
            let times: Vec<u64> = (0..len as u64).collect();
            let truth: Vec<Vec<bool>> = conds
                .iter()
                .map(|(_, f)| masks.iter().map(|&m| f(m)).collect())
                .collect();
            for (c, a, b) in &constraints {
                checks += 1;
                let expected = support::semantics::holds(c, &times, &truth[*a], &truth[*b]);
                if check_constraint(c, &traj) != expected && mismatches.len() < 5 {
                    mismatches.push(format!("{c} on {masks:?}"));
                }
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        mismatches.is_empty() && secs < 60.0,
        format!(
            "{} mismatches over {checks} checks ({trajectories} trajectories x {} constraints) in {secs:.1}s{}",
            mismatches.len(),
            constraints.len(),
            if mismatches.is_empty() { String::new() } else { format!("; first: {}", mismatches.join(" | ")) }
        ),
    )
}

// ---------------------------------------------------------------- parser

fn fixpoint<T: PartialEq>(
    text: &str,
    parse: impl Fn(&str) -> Result<T, String>,
    render: impl Fn(&T) -> String,
) -> Result<(), String> {
    let m1 = parse(text)?;
    let r1 = render(&m1);
    let m2 = parse(&r1).map_err(|e| format!("re-parse failed: {e}"))?;
    let r2 = render(&m2);
    if r1 != r2 {
        return Err(format!("render not a fixpoint:\n{r1}\n---\n{r2}"));
    }
    if m1 != m2 {
        return Err("re-parsed model differs".into());
    }
    Ok(())
}

fn random_condition(pool: &ConstraintPool, depth: u32, rng: &mut ChaCha8Rng) -> Condition {
    if depth == 0 || rng.random_bool(0.5) {
        let l = pool.literals()[rng.random_range(0..pool.literals().len())].clone();
        return if rng.random_bool(0.3) { l.negated() } else { l };
    }
    let a = random_condition(pool, depth - 1, rng);
    match rng.random_range(0..3) {
        0 => Condition::not(a),
        1 => Condition::and(a, random_condition(pool, depth - 1, rng)),
        _ => Condition::or(a, random_condition(pool, depth - 1, rng)),
    }
}

fn random_time(rng: &mut ChaCha8Rng) -> Time {
    if rng.random_bool(0.5) {
        Time::from_units(rng.random_range(0..30))
    } else {
        Time::from_millis(rng.random_range(0..30_000))
    }
}

fn random_spec(pool: &ConstraintPool, rng: &mut ChaCha8Rng) -> Specification {
    let n = rng.random_range(1..=5);
    let items = (0..n)
        .map(|_| {
            let kind = ConstraintKind::ALL[rng.random_range(0..ConstraintKind::ALL.len())];
            let conds = (0..kind.condition_arity())
                .map(|_| random_condition(pool, 3, rng))
                .collect();
            let mut durs: Vec<Time> = (0..kind.duration_arity())
                .map(|_| random_time(rng))
                .collect();
            if let [a, b] = durs[..] {
                // hold-during windows are non-empty
                durs = vec![
                    a.min(b),
                    Time::from_millis(a.max(b).millis() + 1 + rng.random_range(0..2000)),
                ];
            }
            TrajectoryConstraint::from_parts(kind, conds, durs).expect("arity matches")
        })
        .collect();
    Specification::new(items)
}

fn pack_round_trips() -> (usize, Vec<String>) {
    let mut files = 0;
    let mut failures = Vec::new();
    for name in pack_names() {
        let dir = pack_dir(name);
        let domain_text = std::fs::read_to_string(dir.join("domain.pddl")).expect("domain file");
        files += 1;
        if let Err(e) = fixpoint(
            &domain_text,
            |t| parse_domain(t).map_err(|e| e.to_string()),
            render_domain,
        ) {
            failures.push(format!("{name}/domain.pddl: {e}"));
        }
        let Ok(domain) = parse_domain(&domain_text) else {
            continue;
        };
        let mut problems = Vec::new();
        let mut entries: Vec<_> = std::fs::read_dir(dir.join("problems"))
            .expect("problems dir")
            .flatten()
            .collect();
        entries.sort_by_key(|e| e.path());
        for entry in entries {
            let text = std::fs::read_to_string(entry.path()).expect("problem file");
            files += 1;
            let label = format!("{name}/problems/{}", entry.file_name().to_string_lossy());
            if let Err(e) = fixpoint(
                &text,
                |t| parse_problem(t, &domain).map_err(|e| e.to_string()),
                |p| render_problem(p, None),
            ) {
                failures.push(format!("{label}: {e}"));
            }
            if let Ok(p) = parse_problem(&text, &domain) {
                problems.push((
                    entry
                        .path()
                        .file_stem()
                        .unwrap()
                        .to_string_lossy()
                        .to_string(),
                    p,
                ));
            }
        }
        let arch_text =
            std::fs::read_to_string(dir.join("archetypes.json")).expect("archetype file");
        files += 1;
        let value: serde_json::Value = serde_json::from_str(&arch_text).expect("archetype json");
        let records: Vec<ArchetypeRecord> =
            serde_json::from_value(value["archetypes"].clone()).expect("archetype records");
        for r in &records {
            let Some((_, problem)) = problems.iter().find(|(id, _)| *id == r.problem) else {
                failures.push(format!("{name}/{}: unknown problem {}", r.id, r.problem));
                continue;
            };
            let text = r.ground_truth.join("\n");
            if let Err(e) = fixpoint(
                &text,
                |t| parse_specification(t, &domain, problem).map_err(|e| e.to_string()),
                render_specification,
            ) {
                failures.push(format!("{name}/{}: {e}", r.id));
            }
        }
    }
    (files, failures)
}

fn generated_round_trips(n: usize) -> Vec<String> {
    let (d, p) = naval("desk");
    let pool = ConstraintPool::enumerate(&d, &p, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let mut failures = Vec::new();
    for _ in 0..n {
        let spec = random_spec(&pool, &mut rng);
        let text = render_specification(&spec);
        match parse_specification(&text, &d, &p) {
            Ok(parsed) if parsed == spec => {
                if render_specification(&parsed) != text {
                    failures.push(format!("render drift: {text}"));
                }
            }
            Ok(_) => failures.push(format!("structure changed: {text}")),
            Err(e) => failures.push(format!("{e}: {text}")),
        }
    }
    failures
}

struct FuzzReport {
    inputs: u64,
    panics: Vec<String>,
    secs: f64,
}

const FUZZ_ALPHABET: &[u8] = b"()?-:; \n\tabcxyz_019.=\"'";

fn fuzz(budget: Duration) -> FuzzReport {
    let (d, p) = naval("desk");
    let mini = naval("mini").1;
    let mut seeds: Vec<String> = vec![
        render_domain(&d),
        render_problem(&p, None),
        render_problem(&mini, None),
        "0.000: (move sct_ast_0 wpt_ini wpt_b_0) [1.000]\n1.000: (move sct_ast_0 wpt_b_0 wpt_end) [1.000]\n".into(),
        "```pddl\n(:constraints (and (sometime (at sct_ast_0 wpt_end)) (hold-during 1.5 3 (not (at shp_0 wpt_ini)))))\n```".into(),
    ];
    let pool = ConstraintPool::enumerate(&d, &p, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(0xF022);
    for _ in 0..20 {
        seeds.push(render_specification(&random_spec(&pool, &mut rng)));
    }
    for name in pack_names() {
        if let Ok(t) = std::fs::read_to_string(pack_dir(name).join("domain.pddl")) {
            seeds.push(t);
        }
    }

    let started = Instant::now();
    let mut inputs = 0u64;
    let mut panics = Vec::new();
    while started.elapsed() < budget {
        let bytes: Vec<u8> = match rng.random_range(0..3) {
            0 => (0..rng.random_range(0..256))
                .map(|_| rng.random())
                .collect(),
            1 => (0..rng.random_range(0..256))
                .map(|_| FUZZ_ALPHABET[rng.random_range(0..FUZZ_ALPHABET.len())])
                .collect(),
            _ => {
                let mut b = seeds[rng.random_range(0..seeds.len())].clone().into_bytes();
                for _ in 0..rng.random_range(1..8) {
                    if b.is_empty() {
                        break;
                    }
                    let i = rng.random_range(0..b.len());
                    match rng.random_range(0..5) {
                        0 => {
                            let j = rng.random_range(i..=b.len().min(i + 16));
                            b.drain(i..j);
                        }
                        1 => b.insert(i, FUZZ_ALPHABET[rng.random_range(0..FUZZ_ALPHABET.len())]),
                        2 => b[i] = rng.random(),
                        3 => {
                            let j = rng.random_range(i..=b.len().min(i + 32));
                            let chunk = b[i..j].to_vec();
                            b.splice(i..i, chunk);
                        }
                        _ => b.truncate(i),
                    }
                }
                b
            }
        };
        let text = String::from_utf8_lossy(&bytes).into_owned();
        inputs += 1;
        let result = catch_unwind(AssertUnwindSafe(|| {
            let _ = parse_domain(&text);
            let _ = parse_problem(&text, &d);
            let _ = parse_specification(&text, &d, &p);
            let _ = extract_constraints(&text, &d, &p);
            let _ = parse_constraint(&text, &d, &p);
            let _ = parse_plan(&text, &d);
        }));
        if result.is_err() && panics.len() < 5 {
            panics.push(format!("{text:?}"));
        }
    }
    FuzzReport {
        inputs,
        panics,
        secs: started.elapsed().as_secs_f64(),
    }
}

fn parser(fuzz_thread: std::thread::JoinHandle<FuzzReport>, budget: Duration) -> Outcome {
    let (files, file_failures) = pack_round_trips();
    let gen_failures = generated_round_trips(10_000);
    let fuzz = fuzz_thread.join().unwrap_or_else(|_| FuzzReport {
        inputs: 0,
        panics: vec!["fuzz thread died".into()],
        secs: 0.0,
    });
    let pass = file_failures.is_empty()
        && gen_failures.is_empty()
        && fuzz.panics.is_empty()
        && fuzz.secs >= budget.as_secs_f64();
    let mut detail = format!(
        "{}/{files} pack files, {}/10000 generated specs at fixpoint; fuzz {} inputs in {:.0}s, {} panics",
        files - file_failures.len().min(files),
        10_000 - gen_failures.len(),
        fuzz.inputs,
        fuzz.secs,
        fuzz.panics.len()
    );
    for f in file_failures
        .iter()
        .chain(&gen_failures)
        .chain(&fuzz.panics)
        .take(3)
    {
        detail.push_str(&format!("; {}", f.lines().next().unwrap_or("")));
    }
    outcome(pass, detail)
}

// ---------------------------------------------------------------- GA operators

fn ga_operators() -> Outcome {
    let (d, p) = naval("desk");
    let pool = ConstraintPool::enumerate(&d, &p, 10);
    let mut problems = Vec::new();
    for trial in 0..10_000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let a = Specification::new(
            (0..rng.random_range(1..6))
                .map(|_| pool.sample(&mut rng))
                .collect(),
        );
        let b = Specification::new(
            (0..rng.random_range(1..6))
                .map(|_| pool.sample(&mut rng))
                .collect(),
        );
        let (c1, c2) = crossover(&a, &b, &mut rng);
        if c1.len() + c2.len() != a.len() + b.len() {
            problems.push(format!(
                "crossover {}+{} -> {}+{}",
                a.len(),
                b.len(),
                c1.len(),
                c2.len()
            ));
        }
        for opts in [
            MutationOptions::default(),
            MutationOptions {
                duplicate_branch: true,
            },
        ] {
            let (m, tag) = mutate_tagged(&a, &pool, &mut rng, opts);
            let delta = m.len() as i64 - a.len() as i64;
            if m.is_empty() || !(-1..=1).contains(&delta) {
                problems.push(format!(
                    "mutation {} -> {} via {}",
                    a.len(),
                    m.len(),
                    tag.as_str()
                ));
            }
        }
    }

    // reproducibility of a whole search, sequential and parallel
    let (md, mp) = naval("mini");
    let planner = builtin(16, Duration::from_secs(10));
    let oracle = ExactOracle::new(Arc::new(md.clone()), Arc::new(mp.clone()));
    let truth =
        parse_specification("(:constraints (sometime (at sct_ast_0 wpt_end)))", &md, &mp).unwrap();
    let feedback = FeedbackSet::new(vec![FeedbackStatement::new(
        "scout visits the end",
        Some(truth),
    )])
    .unwrap();
    let initial =
        parse_specification("(:constraints (sometime (at sct_ast_0 wpt_b_0)))", &md, &mp).unwrap();
    let mini_pool = ConstraintPool::enumerate(&md, &mp, 10);
    let run = |width: usize| -> Vec<u8> {
        let ev = Evaluator::new(&md, &mp, &planner, &oracle, &feedback);
        let cfg = GAConfig {
            seed: 1234,
            width,
            ..GAConfig::default()
        };
        let r = evolve(&initial, &mini_pool, &ev, &cfg, None).expect("evolve runs");
        let mut bytes = serde_json::to_vec(&r.history).unwrap();
        write_log(&r.log, &mut bytes).unwrap();
        bytes
    };
    let first = run(1);
    let identical = run(1) == first && run(4) == first;
    if !identical {
        problems.push("evolve output differs between runs with one seed".into());
    }
    outcome(
        problems.is_empty(),
        format!(
            "10000 trials: {} violations; evolve history+log identical across 3 runs (widths 1,1,4): {identical}{}",
            problems.len(),
            problems.first().map(|p| format!("; first: {p}")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------- planner

const LAMP_DOMAIN: &str = "
(define (domain lamps)
  (:requirements :strips :typing :negative-preconditions :constraints)
  (:types lamp)
  (:predicates (lit ?l - lamp) (wired ?a - lamp ?b - lamp))
  (:action turn-on :parameters (?l - lamp)
    :precondition (not (lit ?l)) :effect (lit ?l))
  (:action turn-off :parameters (?l - lamp)
    :precondition (lit ?l) :effect (not (lit ?l)))
  (:action pass :parameters (?a - lamp ?b - lamp)
    :precondition (and (wired ?a ?b) (lit ?a) (not (lit ?b)))
    :effect (and (not (lit ?a)) (lit ?b))))";

struct MicroSetup {
    name: &'static str,
    lamps: usize,
    wires: &'static [(usize, usize)],
}

const MICRO: [MicroSetup; 3] = [
    MicroSetup {
        name: "two-lamps-one-wire",
        lamps: 2,
        wires: &[(0, 1)],
    },
    MicroSetup {
        name: "two-lamps-loop",
        lamps: 2,
        wires: &[(0, 1), (1, 0)],
    },
    MicroSetup {
        name: "three-lamps",
        lamps: 3,
        wires: &[],
    },
];

fn lamp(i: usize) -> String {
    format!("l{i}")
}

fn micro_problem(domain: &DomainModel, setup: &MicroSetup) -> ProblemModel {
    let objects: Vec<String> = (0..setup.lamps).map(lamp).collect();
    let wires: Vec<String> = setup
        .wires
        .iter()
        .map(|(a, b)| format!("(wired {} {})", lamp(*a), lamp(*b)))
        .collect();
    let text = format!(
        "(define (problem {}) (:domain lamps) (:objects {} - lamp) (:init {}) (:goal (lit l0)))",
        setup.name,
        objects.join(" "),
        wires.join(" ")
    );
    parse_problem(&text, domain).expect("micro problem parses")
}

/// Every executable action sequence of length <= 4 from `init`, as the list
/// of visited masks.
fn micro_paths(setup: &MicroSetup, init: u8) -> Vec<Vec<u8>> {
    let mut moves: Vec<Box<dyn Fn(u8) -> Option<u8>>> = Vec::new();
    for i in 0..setup.lamps {
        let bit = 1u8 << i;
        moves.push(Box::new(move |m| (m & bit == 0).then_some(m | bit)));
        moves.push(Box::new(move |m| (m & bit != 0).then_some(m & !bit)));
    }
    for &(a, b) in setup.wires {
        let (ba, bb) = (1u8 << a, 1u8 << b);
        moves.push(Box::new(move |m| {
            (m & ba != 0 && m & bb == 0).then_some((m & !ba) | bb)
        }));
    }
    let mut out = vec![vec![init]];
    let mut frontier = vec![vec![init]];
    for _ in 0..4 {
        let mut next = Vec::new();
        for path in &frontier {
            let last = *path.last().unwrap();
            for mv in &moves {
                if let Some(m) = mv(last) {
                    let mut p = path.clone();
                    p.push(m);
                    next.push(p);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn micro_truth(c: &Condition, m: u8, setup: &MicroSetup) -> bool {
    c.eval(&mut |a: &Atom| match a.predicate.as_str() {
        "lit" => {
            let i: usize = a.args[0][1..].parse().unwrap();
            m >> i & 1 == 1
        }
        "wired" => {
            let i: usize = a.args[0][1..].parse().unwrap();
            let j: usize = a.args[1][1..].parse().unwrap();
            setup.wires.contains(&(i, j))
        }
        _ => false,
    })
}

struct PlannerTally {
    tasks: u64,
    solved: u64,
    misses: Vec<String>,
    unsound: Vec<String>,
}

fn check_solved(d: &DomainModel, p: &ProblemModel, spec: &Specification, plan: &Plan) -> bool {
    validate(d, p, plan, spec).is_ok_and(|r| r.is_valid())
        && simulate(d, p, plan).is_ok_and(|t| {
            check_goal(p, &t) && p.base_constraints.iter().all(|c| check_constraint(c, &t))
        })
}

fn micro_suite(tally: &mut PlannerTally) {
    let domain = parse_domain(LAMP_DOMAIN).expect("lamp domain parses");
    let planner = builtin(4, Duration::from_secs(10));
    for setup in &MICRO {
        let base = micro_problem(&domain, setup);
        let pool = ConstraintPool::enumerate(&domain, &base, 3);
        let mut specs = vec![Specification::default()];
        specs.extend((0..pool.len()).map(|i| Specification::new(vec![pool.get(i).unwrap()])));
        // goals: each lamp required lit, required dark, or free; not all free
        let mut goals = Vec::new();
        for code in 1..3usize.pow(setup.lamps as u32) {
            let mut parts = Vec::new();
            for i in 0..setup.lamps {
                match code / 3usize.pow(i as u32) % 3 {
                    1 => parts.push(Condition::atom("lit", [lamp(i)])),
                    2 => parts.push(Condition::not(Condition::atom("lit", [lamp(i)]))),
                    _ => {}
                }
            }
            goals.push(Condition::conjunction(parts).unwrap());
        }
        for init in 0..(1u8 << setup.lamps) {
            let paths = micro_paths(setup, init);
            let mut problem = base.clone();
            problem.init.extend(
                (0..setup.lamps)
                    .filter(|i| init >> i & 1 == 1)
                    .map(|i| Atom::new("lit", [lamp(i)])),
            );
            for spec in &specs {
                // final masks reachable by some sequence satisfying the constraints
                let mut finals = 0u32;
                for path in &paths {
                    let times: Vec<u64> = (0..path.len() as u64).collect();
                    let ok = spec.iter().all(|c| {
                        let cs = c.conditions();
                        let phi: Vec<bool> =
                            path.iter().map(|&m| micro_truth(cs[0], m, setup)).collect();
                        let psi: Vec<bool> = match cs.get(1) {
                            Some(c2) => path.iter().map(|&m| micro_truth(c2, m, setup)).collect(),
                            None => phi.clone(),
                        };
                        support::semantics::holds(c, &times, &phi, &psi)
                    });
                    if ok {
                        finals |= 1 << path.last().unwrap();
                    }
                }
                for goal in &goals {
                    problem.goal = goal.clone();
                    let exists =
                        (0..8u8).any(|m| finals >> m & 1 == 1 && micro_truth(goal, m, setup));
                    tally.tasks += 1;
                    let result = planner
                        .plan(&domain, &problem, spec)
                        .expect("builtin planner");
                    match &result.outcome {
                        PlanOutcome::Solved(plan) => {
                            tally.solved += 1;
                            if !check_solved(&domain, &problem, spec, plan) || !exists {
                                tally.unsound.push(format!(
                                    "{} init={init:03b} goal={goal} {}",
                                    setup.name,
                                    render_specification(spec)
                                ));
                            }
                        }
                        _ if exists => {
                            tally.misses.push(format!(
                                "{} init={init:03b} goal={goal} {} -> {}",
                                setup.name,
                                render_specification(spec),
                                result.outcome.label()
                            ));
                        }
                        _ => {}
                    }
                }
            }
        }
    }
}

fn planner_soundness(tally: &mut PlannerTally, timeouts: &mut u64) {
    let planner = builtin(24, Duration::from_secs(5));
    for (problem_id, n) in [("mini", 100u64), ("desk", 60)] {
        let (d, p) = naval(problem_id);
        let pool = ConstraintPool::enumerate(&d, &p, 10);
        let specs: Vec<Specification> = (0..n)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(i);
                Specification::new(
                    (0..rng.random_range(1..=3))
                        .map(|_| pool.sample(&mut rng))
                        .collect(),
                )
            })
            .collect();
        let results: Vec<PlanOutcome> = std::thread::scope(|s| {
            let handles: Vec<_> = specs
                .chunks(specs.len().div_ceil(8))
                .map(|chunk| {
                    let (d, p, planner) = (&d, &p, &planner);
                    s.spawn(move || {
                        chunk
                            .iter()
                            .map(|spec| planner.plan(d, p, spec).unwrap().outcome)
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().unwrap())
                .collect()
        });
        for (spec, out) in specs.iter().zip(results) {
            tally.tasks += 1;
            match out {
                PlanOutcome::Solved(plan) => {
                    tally.solved += 1;
                    if !check_solved(&d, &p, spec, &plan) {
                        tally
                            .unsound
                            .push(format!("{problem_id}: {}", render_specification(spec)));
                    }
                }
                PlanOutcome::Timeout => *timeouts += 1,
                PlanOutcome::Unsolvable => {}
            }
        }
    }
}

fn planner() -> Outcome {
    let started = Instant::now();
    let mut naval_tally = PlannerTally {
        tasks: 0,
        solved: 0,
        misses: Vec::new(),
        unsound: Vec::new(),
    };
    let mut timeouts = 0;
    planner_soundness(&mut naval_tally, &mut timeouts);
    let mut micro = PlannerTally {
        tasks: 0,
        solved: 0,
        misses: Vec::new(),
        unsound: Vec::new(),
    };
    micro_suite(&mut micro);
    let pass =
        naval_tally.unsound.is_empty() && micro.unsound.is_empty() && micro.misses.is_empty();
    let first = naval_tally
        .unsound
        .iter()
        .chain(&micro.unsound)
        .chain(&micro.misses)
        .next();
    outcome(
        pass,
        format!(
            "naval: {} solved of {} random specs ({timeouts} timeouts), {} unsound; micro-suite: {} tasks, {} solved, {} misses, {} unsound; {:.1}s{}",
            naval_tally.solved,
            naval_tally.tasks,
            naval_tally.unsound.len(),
            micro.tasks,
            micro.solved,
            micro.misses.len(),
            micro.unsound.len(),
            started.elapsed().as_secs_f64(),
            first.map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------- recovery

const RECOVERY_TRUTHS: [&str; 6] = [
    "(sometime (at sct_ast_0 wpt_end))",
    "(at end (at deb_ast_0 wpt_ini))",
    "(at end (at sct_ast_0 wpt_b_0))",
    "(sometime-before (at slv_ast_0 wpt_b_0) (at sct_ast_0 wpt_b_0))",
    "(sometime-before (at shp_0 wpt_b_0) (at sct_ast_0 wpt_end))",
    "(at end (at sct_ast_0 wpt_end))",
];

fn recovery() -> Outcome {
    let started = Instant::now();
    let (d, p) = naval("mini");
    let planner = builtin(16, Duration::from_secs(10));
    let oracle = ExactOracle::new(Arc::new(d.clone()), Arc::new(p.clone()));
    let pool = ConstraintPool::enumerate(&d, &p, 10);
    let base = planner
        .plan(&d, &p, &Specification::default())
        .unwrap()
        .outcome
        .into_plan()
        .expect("base plan");
    let base_traj = simulate(&d, &p, &base).unwrap();
    let truths: Vec<Specification> = RECOVERY_TRUTHS
        .iter()
        .map(|t| {
            parse_specification(&format!("(:constraints {t})"), &d, &p)
                .expect("ground truth parses")
        })
        .collect();
    if let Some(t) = truths
        .iter()
        .find(|t| t.iter().all(|c| check_constraint(c, &base_traj)))
    {
        return outcome(
            false,
            format!(
                "setup: base plan already satisfies {}",
                render_specification(t)
            ),
        );
    }

    let trials = 50u64;
    let mut recovered = 0;
    let mut seed_adherent = 0;
    for trial in 0..trials {
        let truth = &truths[trial as usize % truths.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let perturbed = mutate(truth, &pool, &mut rng);
        let feedback = FeedbackSet::new(vec![FeedbackStatement::new(
            format!("statement {trial}"),
            Some(truth.clone()),
        )])
        .unwrap();
        let ev = Evaluator::new(&d, &p, &planner, &oracle, &feedback);
        let cfg = GAConfig {
            population_size: 20,
            max_generations: 3,
            elite_fraction: 0.5,
            seed: trial,
            width: 0,
            ..GAConfig::default()
        };
        let r = evolve(&perturbed, &pool, &ev, &cfg, None).expect("evolve runs");
        if r.history
            .first()
            .is_some_and(|h| h.best_genotype == perturbed.canonical() && h.best_fitness >= 1.0)
        {
            seed_adherent += 1;
        }
        if r.reached_full_adherence() {
            recovered += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    let rate = recovered as f64 / trials as f64;
    outcome(
        rate >= 0.8 && secs < 600.0,
        format!(
            "{recovered}/{trials} trials reached full adherence ({:.0}%; {seed_adherent} already adherent at the perturbed seed) in {secs:.1}s",
            rate * 100.0
        ),
    )
}

// ---------------------------------------------------------------- end to end

fn experiment_cfg(mode: ExperimentMode, oracle: OracleChoice) -> ExperimentConfig {
    ExperimentConfig {
        mode,
        oracle,
        translator: TranslatorChoice::Template {
            error_rate: 0.3,
            seed: 2024,
        },
        seed: 2024,
        per_archetype: Some(5),
        width: 0,
        ..ExperimentConfig::default()
    }
}

fn end_to_end() -> Outcome {
    let started = Instant::now();
    let pack = load_pack("naval").unwrap();
    let planner = builtin(24, Duration::from_secs(20));
    let full = run_experiment(
        &pack,
        &planner,
        &experiment_cfg(ExperimentMode::Full, OracleChoice::Exact),
    )
    .expect("full run");
    let only = run_experiment(
        &pack,
        &planner,
        &experiment_cfg(ExperimentMode::TranslatorOnly, OracleChoice::Exact),
    )
    .expect("translator-only run");
    let invariants = full.check_invariants().and(only.check_invariants());
    let full_rate = full.full_valid_rate().unwrap_or(0.0);
    let only_rate = only.translator_valid_rate();
    let gain = (full_rate - only_rate) * 100.0;
    outcome(
        full.elements.len() == 45 && gain >= 10.0 && invariants.is_ok(),
        format!(
            "{} elements: full {:.1}% vs translator-only {:.1}% (+{gain:.1} pp); cross invariants {}; {:.1}s",
            full.elements.len(),
            full_rate * 100.0,
            only_rate * 100.0,
            match &invariants {
                Ok(()) => "hold".to_string(),
                Err(e) => format!("broken: {e}"),
            },
            started.elapsed().as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- noisy oracle

fn noisy_oracle() -> Outcome {
    let (d, p) = naval("mini");
    let (d, p) = (Arc::new(d), Arc::new(p));
    let planner = builtin(16, Duration::from_secs(10));
    let plan = planner
        .plan(&d, &p, &Specification::default())
        .unwrap()
        .outcome
        .into_plan()
        .unwrap();
    let kept = parse_specification("(:constraints (sometime (at shp_0 wpt_end)))", &d, &p).unwrap();
    let broken =
        parse_specification("(:constraints (sometime (at sct_ast_0 wpt_end)))", &d, &p).unwrap();
    let noisy = NoisyOracle::new(
        ExactOracle::new(d.clone(), p.clone()),
        NoiseProfile::symmetric(0.125, 77),
    );
    let n = 10_000;
    let mut false_neg = 0;
    let mut false_pos = 0;
    for i in 0..n {
        let pos = FeedbackStatement::new(format!("kept statement {i}"), Some(kept.clone()));
        let neg = FeedbackStatement::new(format!("broken statement {i}"), Some(broken.clone()));
        if !noisy.assess(&plan, &pos).unwrap().adheres {
            false_neg += 1;
        }
        if noisy.assess(&plan, &neg).unwrap().adheres {
            false_pos += 1;
        }
    }
    let fn_rate = false_neg as f64 / n as f64;
    let fp_rate = false_pos as f64 / n as f64;
    let rates_ok = (fn_rate - 0.125).abs() <= 0.01 && (fp_rate - 0.125).abs() <= 0.01;

    let pack = load_pack("naval").unwrap();
    let sweep_planner = builtin(24, Duration::from_secs(20));
    let report = run_experiment(
        &pack,
        &sweep_planner,
        &experiment_cfg(
            ExperimentMode::Full,
            OracleChoice::Noisy(NoiseProfile::symmetric(0.125, 77)),
        ),
    )
    .expect("noisy sweep");
    let fp_failures = report.failures.oracle_false_positive;
    outcome(
        rates_ok && fp_failures > 0 && report.check_invariants().is_ok(),
        format!(
            "flip rates over {n} judgments each: fp {:.2}%, fn {:.2}% (target 12.50% +/- 1); sweep: {fp_failures} oracle-false-positive, {} non-convergence failures",
            fp_rate * 100.0,
            fn_rate * 100.0,
            report.failures.non_convergence
        ),
    )
}

// ---------------------------------------------------------------- training

fn training() -> Outcome {
    let (d, p) = naval("desk");
    let planner = builtin(24, Duration::from_secs(20));
    let cfg = TrainingConfig {
        per_problem: 20,
        seed: 11,
        ..TrainingConfig::default()
    };
    let out = generate_training_instances(&d, &[("desk".to_string(), p.clone())], &planner, &cfg)
        .expect("generator runs");
    let mut labels = 0;
    let mut wrong = 0;
    let mut unbalanced = 0;
    for inst in &out.instances {
        if inst.positive.len() != inst.negative.len() || inst.positive.is_empty() {
            unbalanced += 1;
        }
        let Ok(traj) = simulate(&d, &p, &inst.plan) else {
            wrong += inst.positive.len() + inst.negative.len();
            continue;
        };
        for c in &inst.positive {
            labels += 1;
            if !check_constraint(c, &traj) {
                wrong += 1;
            }
        }
        for c in &inst.negative {
            labels += 1;
            if check_constraint(c, &traj) {
                wrong += 1;
            }
        }
    }
    outcome(
        out.instances.len() == 20 && out.exhausted.is_empty() && wrong == 0 && unbalanced == 0,
        format!(
            "{} instances, {labels} labels, {} re-validate ({wrong} wrong), {unbalanced} unbalanced instances{}",
            out.instances.len(),
            labels - wrong,
            out.exhausted.first().map(|(id, why)| format!("; exhausted {id}: {why}")).unwrap_or_default()
        ),
    )
}

fn main() {
    let budget = Duration::from_secs(
        std::env::var("PLANCRITIC_FUZZ_SECS")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(300),
    );
    // keep expected panics inside the fuzzer quiet
    std::panic::set_hook(Box::new(|_| {}));
    let fuzz_thread = std::thread::Builder::new()
        .name("fuzz".into())
        .stack_size(16 << 20)
        .spawn(move || fuzz(budget))
        .expect("fuzz thread starts");

    let criteria: Vec<(&str, Criterion)> = vec![
        (
            "constraint semantics vs brute-force reference",
            Box::new(semantics),
        ),
        ("GA operator properties", Box::new(ga_operators)),
        (
            "builtin planner soundness and completeness",
            Box::new(planner),
        ),
        ("seeded recovery on mini", Box::new(recovery)),
        ("end-to-end improvement direction", Box::new(end_to_end)),
        ("noisy oracle emulation", Box::new(noisy_oracle)),
        ("training-instance labels", Box::new(training)),
        (
            "parser round-trip and fuzzing",
            Box::new(move || parser(fuzz_thread, budget)),
        ),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "{} {name}: {} [{:.1}s]",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            started.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
