//! Canonical text output. Single spaces, lowercase keywords, input order preserved.

use std::fmt::Write as _;

use super::ast::*;

pub fn render_constraint(c: &TrajectoryConstraint) -> String {
    c.to_string()
}

/// Renders the `(:constraints ...)` block conjoined to a problem goal.
pub fn render_specification(spec: &Specification) -> String {
    match spec.constraints.as_slice() {
        [] => "(:constraints (and))".to_string(),
        [one] => format!("(:constraints {one})"),
        many => {
            let body: Vec<String> = many.iter().map(ToString::to_string).collect();
            format!("(:constraints (and {}))", body.join(" "))
        }
    }
}

fn typed(out: &mut String, items: &[(String, String)]) {
    let mut i = 0;
    while i < items.len() {
        let ty = &items[i].1;
        let mut j = i;
        while j < items.len() && &items[j].1 == ty {
            out.push(' ');
            out.push_str(&items[j].0);
            j += 1;
        }
        let _ = write!(out, " - {ty}");
        i = j;
    }
}

fn params(ps: &[TypedParam]) -> String {
    let pairs: Vec<(String, String)> = ps
        .iter()
        .map(|p| (p.name.clone(), p.type_name.clone()))
        .collect();
    let mut s = String::new();
    typed(&mut s, &pairs);
    s.trim_start().to_string()
}

pub fn render_domain(d: &DomainModel) -> String {
    let mut out = format!("(define (domain {})\n", d.name);
    if !d.requirements.is_empty() {
        let _ = writeln!(out, "  (:requirements {})", d.requirements.join(" "));
    }
    if !d.types.is_empty() {
        let pairs: Vec<(String, String)> = d
            .types
            .iter()
            .map(|t| {
                (
                    t.name.clone(),
                    t.parent.clone().unwrap_or_else(|| ROOT_TYPE.to_string()),
                )
            })
            .collect();
        out.push_str("  (:types");
        typed(&mut out, &pairs);
        out.push_str(")\n");
    }
    if !d.constants.is_empty() {
        out.push_str("  (:constants");
        typed(&mut out, &d.constants);
        out.push_str(")\n");
    }
    out.push_str("  (:predicates");
    for p in &d.predicates {
        let ps = params(&p.parameters);
        if ps.is_empty() {
            let _ = write!(out, "\n    ({})", p.name);
        } else {
            let _ = write!(out, "\n    ({} {})", p.name, ps);
        }
    }
    out.push_str(")\n");
    for a in &d.actions {
        let _ = writeln!(out, "  (:action {}", a.name);
        let _ = writeln!(out, "    :parameters ({})", params(&a.parameters));
        if let Some(pre) = &a.precondition {
            let _ = writeln!(out, "    :precondition {pre}");
        }
        let effects: Vec<String> = a.effects.iter().map(ToString::to_string).collect();
        let _ = write!(out, "    :effect (and {})", effects.join(" "));
        if a.duration != Time::from_units(1) {
            let _ = write!(out, "\n    :duration {}", a.duration);
        }
        out.push_str(")\n");
    }
    out.push_str(")\n");
    out
}

/// Renders a standalone problem file. `extra` is conjoined to the
/// problem's own base constraints.
pub fn render_problem(p: &ProblemModel, extra: Option<&Specification>) -> String {
    let mut out = format!(
        "(define (problem {})\n  (:domain {})\n",
        p.name, p.domain_name
    );
    out.push_str("  (:objects");
    typed(&mut out, &p.objects);
    out.push_str(")\n  (:init");
    for a in &p.init {
        let _ = write!(out, "\n    {a}");
    }
    let _ = write!(out, ")\n  (:goal {})\n", p.goal);
    let mut all = p.base_constraints.constraints.clone();
    if let Some(extra) = extra {
        all.extend(extra.constraints.iter().cloned());
    }
    if !all.is_empty() {
        let _ = writeln!(out, "  {}", render_specification(&Specification::new(all)));
    }
    out.push_str(")\n");
    out
}

pub fn render_plan(plan: &Plan) -> String {
    let mut out = String::new();
    for s in &plan.steps {
        let _ = writeln!(
            out,
            "{}: {} [{}]",
            s.start.fixed3(),
            s.symbolic(),
            s.duration.fixed3()
        );
    }
    out
}
