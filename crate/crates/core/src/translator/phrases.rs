//! Natural-language rendering of plan steps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::pddl::{DomainModel, Plan, PlanStep, ProblemModel};

/// Per-action phrase templates. `{0}`, `{1}`, ... insert arguments and
/// `{t0}`, `{t1}`, ... insert the argument's type with dashes read as spaces.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhraseTable {
    pub templates: BTreeMap<String, String>,
}

impl PhraseTable {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn describe_step(
        &self,
        step: &PlanStep,
        domain: &DomainModel,
        problem: &ProblemModel,
    ) -> String {
        let Some(template) = self.templates.get(&step.action) else {
            return format!("(unrecognized) {}", step.symbolic());
        };
        let mut out = String::with_capacity(template.len() + 16);
        let mut rest = template.as_str();
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let Some(close) = rest[open..].find('}') else {
                out.push_str(&rest[open..]);
                rest = "";
                break;
            };
            let slot = &rest[open + 1..open + close];
            let (typed, ix) = match slot.strip_prefix('t') {
                Some(n) => (true, n),
                None => (false, slot),
            };
            match ix.parse::<usize>().ok().and_then(|i| step.args.get(i)) {
                Some(arg) if typed => {
                    let ty = problem.object_type(domain, arg).unwrap_or("object");
                    out.push_str(&ty.replace('-', " "));
                }
                Some(arg) => out.push_str(arg),
                None => out.push_str(&rest[open..=open + close]),
            }
            rest = &rest[open + close + 1..];
        }
        out.push_str(rest);
        out
    }

    pub fn describe_plan(
        &self,
        plan: &Plan,
        domain: &DomainModel,
        problem: &ProblemModel,
    ) -> Vec<String> {
        plan.steps
            .iter()
            .map(|s| self.describe_step(s, domain, problem))
            .collect()
    }
}
