//! Runs an off-the-shelf PDDL3 planner as a subprocess.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use crate::pddl::{
    parse_plan, parse_plan_line, render_domain, render_problem, DomainModel, Plan, ProblemModel,
    Specification,
};

use super::{PlanOutcome, Planner, PlannerError, PlannerResult};

/// What a planner printed, before any exit-status interpretation.
#[derive(Debug, Clone, PartialEq)]
pub enum PlannerOutput {
    Plan(Plan),
    Unsolvable,
    Nothing,
}

const UNSOLVABLE_MARKERS: [&str; 4] = [
    "no solution",
    "unsolvable",
    "problem proven unsolvable",
    "search exhausted",
];

/// Extracts the last plan block from planner output. Anytime planners print
/// a sequence of improving plans; the final one wins.
pub fn parse_planner_output(
    text: &str,
    domain: &DomainModel,
    problem: &ProblemModel,
) -> Result<PlannerOutput, PlannerError> {
    let mut blocks: Vec<Vec<&str>> = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for raw in text.lines() {
        let line = raw.split(';').next().unwrap_or("").trim();
        if !line.is_empty() && parse_plan_line(line).is_ok() {
            current.push(line);
        } else if !current.is_empty() {
            blocks.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    if let Some(last) = blocks.last() {
        let mut plan = parse_plan(&last.join("\n"), domain)
            .map_err(|e| PlannerError::ParseFailure(e.to_string()))?;
        // some planners lowercase every identifier
        for step in &mut plan.steps {
            for arg in &mut step.args {
                if let Some((name, _)) = problem
                    .objects
                    .iter()
                    .chain(domain.constants.iter())
                    .find(|(o, _)| o.eq_ignore_ascii_case(arg))
                {
                    *arg = name.clone();
                }
            }
        }
        return Ok(PlannerOutput::Plan(plan));
    }
    let lower = text.to_ascii_lowercase();
    if UNSOLVABLE_MARKERS.iter().any(|m| lower.contains(m)) {
        return Ok(PlannerOutput::Unsolvable);
    }
    Ok(PlannerOutput::Nothing)
}

/// Counting semaphore bounding concurrent planner processes.
#[derive(Debug)]
struct Slots {
    free: Mutex<usize>,
    cond: Condvar,
}

struct SlotGuard<'a>(&'a Slots);

impl Slots {
    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cond.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        SlotGuard(self)
    }
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cond.notify_one();
    }
}

pub const DEFAULT_EXTERNAL_TIMEOUT: Duration = Duration::from_secs(60);

/// Planner invoked through an argument template; `{domain}` and `{problem}`
/// are replaced by paths of freshly written files.
#[derive(Debug, Clone)]
pub struct ExternalPlanner {
    pub id: String,
    pub argv: Vec<String>,
    pub timeout: Duration,
    /// Where the process runs; a fresh temporary directory when unset.
    pub working_dir: Option<PathBuf>,
    slots: Arc<Slots>,
}

impl ExternalPlanner {
    /// Fails unless each placeholder appears exactly once in `argv`.
    pub fn new(
        id: impl Into<String>,
        argv: Vec<String>,
        timeout: Duration,
        max_workers: usize,
    ) -> Result<Self, PlannerError> {
        for ph in ["{domain}", "{problem}"] {
            let n: usize = argv.iter().map(|a| a.matches(ph).count()).sum();
            if n != 1 {
                return Err(PlannerError::ProcessFailure(format!(
                    "command template must contain {ph} exactly once, found {n}"
                )));
            }
        }
        Ok(ExternalPlanner {
            id: id.into(),
            argv,
            timeout,
            working_dir: None,
            slots: Arc::new(Slots {
                free: Mutex::new(max_workers.max(1)),
                cond: Condvar::new(),
            }),
        })
    }

    fn command_line(&self, domain: &Path, problem: &Path) -> Vec<String> {
        self.argv
            .iter()
            .map(|a| {
                a.replace("{domain}", &domain.to_string_lossy())
                    .replace("{problem}", &problem.to_string_lossy())
            })
            .collect()
    }
}

/// Kills the planner and everything it spawned, then reaps it.
fn kill_tree(child: &mut Child) {
    #[cfg(unix)]
    if let Ok(pid) = i32::try_from(child.id()) {
        // the child leads its own process group
        unsafe {
            libc::kill(-pid, libc::SIGKILL);
        }
    }
    let _ = child.kill();
    let _ = child.wait();
}

impl Planner for ExternalPlanner {
    fn id(&self) -> &str {
        &self.id
    }

    fn plan(
        &self,
        domain: &DomainModel,
        problem: &ProblemModel,
        spec: &Specification,
    ) -> Result<PlannerResult, PlannerError> {
        let _slot = self.slots.acquire();
        let started = Instant::now();
        let dir = tempfile::tempdir()?;
        let domain_path = dir.path().join("domain.pddl");
        let problem_path = dir.path().join("problem.pddl");
        std::fs::write(&domain_path, render_domain(domain))?;
        std::fs::write(&problem_path, render_problem(problem, Some(spec)))?;
        let argv = self.command_line(&domain_path, &problem_path);
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| PlannerError::ProcessFailure("empty command template".into()))?;
        let mut command = Command::new(program);
        #[cfg(unix)]
        std::os::unix::process::CommandExt::process_group(&mut command, 0);
        let mut child = command
            .args(args)
            .current_dir(self.working_dir.as_deref().unwrap_or(dir.path()))
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| PlannerError::ProcessFailure(format!("cannot start {program}: {e}")))?;
        let mut stdout = child.stdout.take().expect("stdout is piped");
        let reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stdout.read_to_end(&mut buf);
            buf
        });
        let deadline = started + self.timeout;
        let status = loop {
            if let Some(status) = child.try_wait()? {
                break Some(status);
            }
            if Instant::now() >= deadline {
                kill_tree(&mut child);
                break None;
            }
            std::thread::sleep(Duration::from_millis(5));
        };
        let result = |outcome| PlannerResult {
            outcome,
            wall_time: started.elapsed(),
            planner_id: self.id.clone(),
        };
        // on timeout the reader is left behind: a stray grandchild may still
        // hold the pipe open
        let Some(status) = status else {
            return Ok(result(PlanOutcome::Timeout));
        };
        let output = reader.join().unwrap_or_default();
        let text = String::from_utf8_lossy(&output);
        match parse_planner_output(&text, domain, problem)? {
            PlannerOutput::Plan(plan) => Ok(result(PlanOutcome::Solved(plan))),
            PlannerOutput::Unsolvable => Ok(result(PlanOutcome::Unsolvable)),
            PlannerOutput::Nothing if !status.success() => Err(PlannerError::ProcessFailure(
                format!("exit status {status}"),
            )),
            PlannerOutput::Nothing if text.to_ascii_lowercase().contains("solution found") => {
                Ok(result(PlanOutcome::Solved(Plan::default())))
            }
            PlannerOutput::Nothing => Err(PlannerError::ParseFailure(
                "no plan and no unsolvability marker".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::naval_mini;

    const ANYTIME: &str = "\
; Plan found with metric 7.000
0.000: (MOVE deb_ast_0 wpt_ini wpt_b_0) [1.000]
1.000: (collect deb_ast_0 n_deb_b_0_end wpt_b_0 wpt_end) [1.000]
; improving
Cost: 2
0.000: (move DEB_AST_0 wpt_ini wpt_b_0) [1.000]
";

    #[test]
    fn last_block_wins_and_case_is_normalised() {
        let (d, p) = naval_mini();
        let PlannerOutput::Plan(plan) = parse_planner_output(ANYTIME, &d, &p).unwrap() else {
            panic!()
        };
        assert_eq!(plan.len(), 1);
        assert_eq!(plan.steps[0].action, "move");
        assert_eq!(plan.steps[0].args[0], "deb_ast_0");
    }

    #[test]
    fn sentinels() {
        let (d, p) = naval_mini();
        assert_eq!(
            parse_planner_output(";; No solution found\n", &d, &p).unwrap(),
            PlannerOutput::Unsolvable
        );
        assert_eq!(
            parse_planner_output("Problem unsolvable!\n", &d, &p).unwrap(),
            PlannerOutput::Unsolvable
        );
        assert_eq!(
            parse_planner_output("hello\n", &d, &p).unwrap(),
            PlannerOutput::Nothing
        );
    }

    #[test]
    fn unknown_action_in_output_is_parse_failure() {
        let (d, p) = naval_mini();
        let err = parse_planner_output("0.000: (fly a b) [1.000]\n", &d, &p).unwrap_err();
        assert!(matches!(err, PlannerError::ParseFailure(_)));
    }

    #[test]
    fn template_placeholders_checked() {
        let t = Duration::from_secs(1);
        assert!(ExternalPlanner::new("x", vec!["p".into(), "{domain}".into()], t, 1).is_err());
        assert!(ExternalPlanner::new(
            "x",
            vec![
                "p".into(),
                "{domain}".into(),
                "{domain}".into(),
                "{problem}".into()
            ],
            t,
            1
        )
        .is_err());
        assert!(ExternalPlanner::new(
            "x",
            vec!["p".into(), "--d={domain}".into(), "{problem}".into()],
            t,
            1
        )
        .is_ok());
    }

    #[cfg(unix)]
    #[test]
    fn subprocess_plan_timeout_and_failure() {
        let (d, p) = naval_mini();
        let echo = ExternalPlanner::new(
            "echo",
            vec!["sh".into(), "-c".into(), "test -s {domain} && test -s {problem} && printf '0.000: (move sct_ast_0 wpt_ini wpt_b_0) [1.000]\\n'".into()],
            Duration::from_secs(10),
            2,
        )
        .unwrap();
        let r = echo.plan(&d, &p, &Specification::default()).unwrap();
        assert_eq!(r.outcome.plan().map(Plan::len), Some(1));
        assert_eq!(r.planner_id, "echo");

        let slow = ExternalPlanner::new(
            "slow",
            vec![
                "sh".into(),
                "-c".into(),
                "sleep 5".into(),
                "{domain}".into(),
                "{problem}".into(),
            ],
            Duration::from_millis(100),
            1,
        )
        .unwrap();
        let r = slow.plan(&d, &p, &Specification::default()).unwrap();
        assert_eq!(r.outcome, PlanOutcome::Timeout);
        assert!(r.wall_time < Duration::from_secs(4));

        let failing = ExternalPlanner::new(
            "false",
            vec!["false".into(), "{domain}".into(), "{problem}".into()],
            Duration::from_secs(5),
            1,
        )
        .unwrap();
        assert!(matches!(
            failing.plan(&d, &p, &Specification::default()),
            Err(PlannerError::ProcessFailure(_))
        ));

        let missing = ExternalPlanner::new(
            "missing",
            vec![
                "/nonexistent/planner".into(),
                "{domain}".into(),
                "{problem}".into(),
            ],
            Duration::from_secs(5),
            1,
        )
        .unwrap();
        assert!(matches!(
            missing.plan(&d, &p, &Specification::default()),
            Err(PlannerError::ProcessFailure(_))
        ));
    }
}
