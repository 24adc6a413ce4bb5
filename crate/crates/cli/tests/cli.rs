use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_plancritic");

fn naval() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/packs/naval")
}

fn fixture() -> String {
    format!(
        "fixture:{}/../core/fixtures/naval_translator.json",
        env!("CARGO_MANIFEST_DIR")
    )
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("PLANCRITIC_TOKEN")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn mini_plan(dir: &Path) -> PathBuf {
    let pack = naval();
    let out = run(&[
        "plan",
        pack.join("domain.pddl").to_str().unwrap(),
        pack.join("problems/mini.pddl").to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let path = dir.join("plan.txt");
    std::fs::write(&path, &out.stdout).unwrap();
    path
}

#[test]
fn plan_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let plan = mini_plan(dir.path());
    let text = std::fs::read_to_string(&plan).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("0.000: ("));

    let pack = naval();
    let domain = pack.join("domain.pddl");
    let problem = pack.join("problems/mini.pddl");
    let out = run(&[
        "validate",
        domain.to_str().unwrap(),
        problem.to_str().unwrap(),
        plan.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().last(), Some("adherence_rate\t1"));

    let constraints = dir.path().join("c.pddl");
    std::fs::write(
        &constraints,
        "(:constraints (at end (at sct_ast_0 wpt_end)))",
    )
    .unwrap();
    let report = dir.path().join("report.json");
    let out = run(&[
        "--report",
        report.to_str().unwrap(),
        "validate",
        domain.to_str().unwrap(),
        problem.to_str().unwrap(),
        plan.to_str().unwrap(),
        "--constraints",
        constraints.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let s = stdout(&out);
    assert!(s.contains("(at end (at sct_ast_0 wpt_end))\tfalse"), "{s}");
    assert_eq!(s.lines().last(), Some("adherence_rate\t0"));
    let json: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["goal_satisfied"], true);
    assert_eq!(json["valid"], false);
    assert_eq!(json["constraints"][0]["holds"], false);
}

#[test]
fn unreadable_input_is_an_error() {
    let pack = naval();
    let out = run(&[
        "plan",
        pack.join("domain.pddl").to_str().unwrap(),
        "/nonexistent/problem.pddl",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/problem.pddl"));
}

#[test]
fn corpus_list_and_generate() {
    let out = run(&["corpus", "list"]);
    assert_eq!(out.status.code(), Some(0));
    let s = stdout(&out);
    assert!(s.lines().count() > 10);
    assert!(s.lines().all(|l| l.split('\t').count() == 3), "{s}");

    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "corpus",
        "generate",
        "--scenario",
        "mini",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let domain = std::fs::read_to_string(dir.path().join("domain.pddl")).unwrap();
    assert!(domain.contains("(define (domain"));
    assert!(dir.path().join("naval-mini.pddl").exists());
}

#[test]
fn evolve_with_fixture_translator() {
    let out = run(&[
        "--translator",
        &fixture(),
        "evolve",
        "--feedback",
        "Send the scout out to the endpoint",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = stdout(&out);
    assert!(
        s.contains("-> (:constraints (sometime (at sct_ast_0 wpt_end)))"),
        "{s}"
    );
    assert!(s.contains("(move sct_ast_0 wpt_b_0 wpt_end)"), "{s}");
    assert!(s.lines().last().unwrap().starts_with("adheres\t"));
}

#[test]
fn experiment_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = run(&[
        "--report",
        report.to_str().unwrap(),
        "experiment",
        "--mode",
        "full",
        "--per-archetype",
        "1",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("full pipeline valid rate"));
    let json: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["mode"], "full");
    assert_eq!(json["config"]["per_archetype"], 1);
    assert!(!json["elements"].as_array().unwrap().is_empty());
}

#[test]
fn bad_options_exit_two() {
    for args in [
        &["--oracle", "bogus", "experiment"][..],
        &[
            "--translator",
            "fixture:/nonexistent.json",
            "evolve",
            "--feedback",
            "x",
        ][..],
        &[
            "--engine",
            "nope",
            "corpus",
            "training",
            "--out",
            "/dev/null",
        ][..],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(
            String::from_utf8_lossy(&out.stderr).starts_with("error: "),
            "{args:?}"
        );
    }
}
