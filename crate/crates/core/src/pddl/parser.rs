use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::ast::*;
use super::sexpr::{self, syntax, SExpr};
use super::ParseError;

/// Upper bound on the nesting of a parsed condition after n-ary folding.
const MAX_CONDITION_DEPTH: usize = 256;

fn semantic(identifier: impl Into<String>, message: impl Into<String>) -> ParseError {
    ParseError::Semantic {
        identifier: identifier.into(),
        message: message.into(),
    }
}

fn expect_symbol<'a>(e: &'a SExpr, what: &str) -> Result<&'a str, ParseError> {
    e.as_symbol()
        .ok_or_else(|| syntax(e.pos(), format!("expected {what}, found a list")))
}

fn expect_list<'a>(e: &'a SExpr, what: &str) -> Result<&'a [SExpr], ParseError> {
    e.as_list()
        .ok_or_else(|| syntax(e.pos(), format!("expected {what}, found symbol")))
}

/// Parses `a b - t c - u d` style typed lists. Untyped names get `object`.
fn typed_list(items: &[SExpr]) -> Result<Vec<(String, String)>, ParseError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let sym = expect_symbol(&items[i], "a name")?;
        if sym == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| syntax(items[i].pos(), "type expected after '-'"))?;
            let ty = expect_symbol(ty, "a type name")?;
            if pending.is_empty() {
                return Err(syntax(items[i].pos(), "'-' without preceding names"));
            }
            out.extend(pending.drain(..).map(|n| (n, ty.to_string())));
            i += 2;
        } else {
            pending.push(sym.to_string());
            i += 1;
        }
    }
    out.extend(pending.into_iter().map(|n| (n, ROOT_TYPE.to_string())));
    Ok(out)
}

/// How terms inside a condition are resolved to types.
enum TermScope<'a> {
    /// Schema body: variables from parameters plus domain constants.
    Schema {
        params: &'a [TypedParam],
        domain: &'a DomainModel,
    },
    /// Ground context: problem objects plus domain constants.
    Ground {
        domain: &'a DomainModel,
        problem: &'a ProblemModel,
    },
    /// Problem file being parsed: objects not yet packaged in a ProblemModel.
    Objects {
        domain: &'a DomainModel,
        objects: &'a BTreeMap<String, String>,
    },
}

impl TermScope<'_> {
    fn domain(&self) -> &DomainModel {
        match self {
            TermScope::Schema { domain, .. }
            | TermScope::Ground { domain, .. }
            | TermScope::Objects { domain, .. } => domain,
        }
    }

    fn term_type(&self, term: &str) -> Option<String> {
        let domain = self.domain();
        if let Some((_, t)) = domain.constants.iter().find(|(c, _)| c == term) {
            return Some(t.clone());
        }
        match self {
            TermScope::Schema { params, .. } => params
                .iter()
                .find(|p| p.name == term)
                .map(|p| p.type_name.clone()),
            TermScope::Ground { domain, problem } => {
                problem.object_type(domain, term).map(str::to_string)
            }
            TermScope::Objects { objects, .. } => objects.get(term).cloned(),
        }
    }
}

fn parse_atom(e: &SExpr, scope: &TermScope<'_>) -> Result<Atom, ParseError> {
    let items = expect_list(e, "an atom")?;
    let (head, args) = items
        .split_first()
        .ok_or_else(|| syntax(e.pos(), "empty atom"))?;
    let name = expect_symbol(head, "a predicate name")?;
    let args: Vec<String> = args
        .iter()
        .map(|a| expect_symbol(a, "a term").map(str::to_string))
        .collect::<Result<_, _>>()?;
    let atom = Atom::new(name, args);
    check_atom(&atom, scope)?;
    Ok(atom)
}

fn check_atom(atom: &Atom, scope: &TermScope<'_>) -> Result<(), ParseError> {
    let domain = scope.domain();
    let sig = domain
        .predicate(&atom.predicate)
        .ok_or_else(|| semantic(&atom.predicate, "unknown predicate"))?;
    if sig.parameters.len() != atom.args.len() {
        return Err(semantic(
            atom.to_string(),
            format!(
                "predicate {} takes {} argument(s), got {}",
                sig.name,
                sig.parameters.len(),
                atom.args.len()
            ),
        ));
    }
    for (arg, param) in atom.args.iter().zip(&sig.parameters) {
        let ty = scope.term_type(arg).ok_or_else(|| {
            if arg.starts_with('?') {
                semantic(arg, "undeclared variable")
            } else {
                semantic(arg, "unknown object")
            }
        })?;
        if !domain.is_subtype(&ty, &param.type_name) {
            return Err(semantic(
                atom.to_string(),
                format!("argument {arg} has type {ty}, expected {}", param.type_name),
            ));
        }
    }
    Ok(())
}

fn parse_condition(e: &SExpr, scope: &TermScope<'_>) -> Result<Condition, ParseError> {
    let cond = parse_condition_inner(e, scope)?;
    if condition_depth(&cond) > MAX_CONDITION_DEPTH {
        return Err(syntax(e.pos(), "condition nested too deeply"));
    }
    Ok(cond)
}

fn condition_depth(c: &Condition) -> usize {
    match c {
        Condition::Atom(_) => 1,
        Condition::Not(c) => 1 + condition_depth(c),
        Condition::And(a, b) | Condition::Or(a, b) => {
            1 + condition_depth(a).max(condition_depth(b))
        }
    }
}

fn parse_condition_inner(e: &SExpr, scope: &TermScope<'_>) -> Result<Condition, ParseError> {
    let items = expect_list(e, "a condition")?;
    match e.head().as_deref() {
        Some("not") => {
            if items.len() != 2 {
                return Err(syntax(e.pos(), "not takes exactly one operand"));
            }
            Ok(Condition::not(parse_condition_inner(&items[1], scope)?))
        }
        Some(op @ ("and" | "or")) => {
            if items.len() < 3 && !(op == "and" && items.len() == 2) {
                return Err(syntax(e.pos(), format!("{op} needs at least two operands")));
            }
            let mut parts = items[1..]
                .iter()
                .map(|i| parse_condition_inner(i, scope))
                .collect::<Result<Vec<_>, _>>()?;
            if parts.len() == 1 {
                return Ok(parts.pop().expect("one operand"));
            }
            let mut acc = parts.pop().expect("non-empty");
            while let Some(prev) = parts.pop() {
                acc = if op == "and" {
                    Condition::and(prev, acc)
                } else {
                    Condition::or(prev, acc)
                };
            }
            Ok(acc)
        }
        _ => Ok(Condition::Atom(parse_atom(e, scope)?)),
    }
}

/// Precondition slot: `(and)` means no precondition.
fn parse_optional_condition(
    e: &SExpr,
    scope: &TermScope<'_>,
) -> Result<Option<Condition>, ParseError> {
    if e.head().as_deref() == Some("and") && e.as_list().is_some_and(|l| l.len() == 1) {
        return Ok(None);
    }
    parse_condition(e, scope).map(Some)
}

fn parse_effects(e: &SExpr, scope: &TermScope<'_>) -> Result<Vec<Literal>, ParseError> {
    let items = expect_list(e, "an effect")?;
    let literal_exprs: Vec<&SExpr> = if e.head().as_deref() == Some("and") {
        items[1..].iter().collect()
    } else {
        vec![e]
    };
    let mut out = Vec::new();
    for le in literal_exprs {
        let lit = if le.head().as_deref() == Some("not") {
            let inner = expect_list(le, "a negated atom")?;
            if inner.len() != 2 {
                return Err(syntax(le.pos(), "not takes exactly one operand"));
            }
            Literal {
                positive: false,
                atom: parse_atom(&inner[1], scope)?,
            }
        } else {
            match le.head().as_deref() {
                Some(kw @ ("and" | "or" | "when" | "forall" | "increase" | "decrease")) => {
                    return Err(syntax(le.pos(), format!("unsupported effect form '{kw}'")));
                }
                _ => Literal {
                    positive: true,
                    atom: parse_atom(le, scope)?,
                },
            }
        };
        out.push(lit);
    }
    Ok(out)
}

fn parse_number(e: &SExpr, what: &str) -> Result<Time, ParseError> {
    let s = expect_symbol(e, what)?;
    Time::parse_decimal(s).ok_or_else(|| {
        syntax(
            e.pos(),
            format!("expected a non-negative number for {what}, found '{s}'"),
        )
    })
}

fn parse_header<'a>(top: &'a SExpr, kind: &str) -> Result<(String, &'a [SExpr]), ParseError> {
    let items = expect_list(top, "(define ...)")?;
    if !items.first().is_some_and(|h| h.is_keyword("define")) {
        return Err(syntax(top.pos(), "expected (define ...)"));
    }
    let header = items
        .get(1)
        .ok_or_else(|| syntax(top.pos(), format!("missing ({kind} <name>)")))?;
    let h = expect_list(header, "a header")?;
    if h.len() != 2 || !h[0].is_keyword(kind) {
        return Err(syntax(header.pos(), format!("expected ({kind} <name>)")));
    }
    Ok((expect_symbol(&h[1], "a name")?.to_string(), &items[2..]))
}

fn single_top(text: &str) -> Result<SExpr, ParseError> {
    sexpr::read_one(text)
}

pub fn parse_domain(text: &str) -> Result<DomainModel, ParseError> {
    let top = single_top(text)?;
    let (name, sections) = parse_header(&top, "domain")?;
    let mut domain = DomainModel {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };
    let mut action_exprs = Vec::new();
    for section in sections {
        let items = expect_list(section, "a domain section")?;
        match section.head().as_deref() {
            Some(":requirements") => {
                for r in &items[1..] {
                    domain
                        .requirements
                        .push(expect_symbol(r, "a requirement")?.to_ascii_lowercase());
                }
            }
            Some(":types") => {
                for (name, parent) in typed_list(&items[1..])? {
                    let parent = (parent != ROOT_TYPE || name == ROOT_TYPE).then_some(parent);
                    if name == ROOT_TYPE {
                        continue;
                    }
                    domain.types.push(TypeDecl { name, parent });
                }
            }
            Some(":constants") => domain.constants.extend(typed_list(&items[1..])?),
            Some(":predicates") => {
                for p in &items[1..] {
                    let pl = expect_list(p, "a predicate signature")?;
                    let (head, rest) = pl
                        .split_first()
                        .ok_or_else(|| syntax(p.pos(), "empty predicate"))?;
                    domain.predicates.push(PredicateSignature {
                        name: expect_symbol(head, "a predicate name")?.to_string(),
                        parameters: typed_list(rest)?
                            .into_iter()
                            .map(|(name, type_name)| TypedParam { name, type_name })
                            .collect(),
                    });
                }
            }
            Some(":action") => action_exprs.push(section),
            Some(kw) => {
                return Err(syntax(
                    section.pos(),
                    format!("unsupported domain section '{kw}'"),
                ))
            }
            None => return Err(syntax(section.pos(), "expected a section keyword")),
        }
    }
    check_domain_declarations(&domain)?;
    for a in action_exprs {
        let action = parse_action(a, &domain)?;
        if domain.action(&action.name).is_some() {
            return Err(semantic(&action.name, "duplicate action"));
        }
        domain.actions.push(action);
    }
    Ok(domain)
}

fn check_domain_declarations(domain: &DomainModel) -> Result<(), ParseError> {
    let mut seen = HashSet::new();
    for t in &domain.types {
        if !seen.insert(t.name.as_str()) {
            return Err(semantic(&t.name, "duplicate type"));
        }
    }
    for t in &domain.types {
        if let Some(p) = &t.parent {
            if !domain.is_declared_type(p) {
                return Err(semantic(p, "undeclared type"));
            }
        }
        // walk to the root; a cycle never reaches it
        let mut current = t.name.as_str();
        let mut steps = 0;
        while let Some(p) = domain
            .types
            .iter()
            .find(|x| x.name == current)
            .and_then(|x| x.parent.as_deref())
        {
            current = p;
            steps += 1;
            if steps > domain.types.len() {
                return Err(semantic(&t.name, "cyclic type hierarchy"));
            }
        }
    }
    let mut consts = HashSet::new();
    for (c, t) in &domain.constants {
        if !consts.insert(c.as_str()) {
            return Err(semantic(c, "duplicate constant"));
        }
        if !domain.is_declared_type(t) {
            return Err(semantic(t, "undeclared type"));
        }
    }
    let mut preds = HashSet::new();
    for p in &domain.predicates {
        if !preds.insert(p.name.as_str()) {
            return Err(semantic(&p.name, "duplicate predicate"));
        }
        let mut vars = HashSet::new();
        for param in &p.parameters {
            if !vars.insert(param.name.as_str()) {
                return Err(semantic(
                    &param.name,
                    format!("duplicate parameter in predicate {}", p.name),
                ));
            }
            if !domain.is_declared_type(&param.type_name) {
                return Err(semantic(&param.type_name, "undeclared type"));
            }
        }
    }
    Ok(())
}

fn parse_action(e: &SExpr, domain: &DomainModel) -> Result<ActionSchema, ParseError> {
    let items = expect_list(e, "an action")?;
    let name = expect_symbol(
        items
            .get(1)
            .ok_or_else(|| syntax(e.pos(), "action name expected"))?,
        "an action name",
    )?
    .to_string();
    let mut parameters = Vec::new();
    let mut pre_expr = None;
    let mut eff_expr = None;
    let mut duration = Time::from_units(1);
    let mut i = 2;
    while i < items.len() {
        let key = expect_symbol(&items[i], "an action keyword")?.to_ascii_lowercase();
        let value = items
            .get(i + 1)
            .ok_or_else(|| syntax(items[i].pos(), format!("missing value for {key}")))?;
        match key.as_str() {
            ":parameters" => {
                parameters = typed_list(expect_list(value, "a parameter list")?)?
                    .into_iter()
                    .map(|(name, type_name)| TypedParam { name, type_name })
                    .collect();
            }
            ":precondition" => pre_expr = Some(value),
            ":effect" => eff_expr = Some(value),
            ":duration" => duration = parse_number(value, "an action duration")?,
            other => {
                return Err(syntax(
                    items[i].pos(),
                    format!("unsupported action keyword '{other}'"),
                ))
            }
        }
        i += 2;
    }
    let mut vars = HashSet::new();
    for p in &parameters {
        if !p.name.starts_with('?') {
            return Err(semantic(&p.name, "action parameters must be variables"));
        }
        if !vars.insert(p.name.as_str()) {
            return Err(semantic(
                &p.name,
                format!("duplicate parameter in action {name}"),
            ));
        }
        if !domain.is_declared_type(&p.type_name) {
            return Err(semantic(&p.type_name, "undeclared type"));
        }
    }
    let scope = TermScope::Schema {
        params: &parameters,
        domain,
    };
    let precondition = match pre_expr {
        Some(p) => parse_optional_condition(p, &scope)?,
        None => None,
    };
    let effects = match eff_expr {
        Some(e) => parse_effects(e, &scope)?,
        None => Vec::new(),
    };
    for (i, a) in effects.iter().enumerate() {
        if effects[..i]
            .iter()
            .any(|b| b.atom == a.atom && b.positive != a.positive)
        {
            return Err(semantic(
                a.atom.to_string(),
                format!("contradictory effects in action {name}"),
            ));
        }
    }
    Ok(ActionSchema {
        name,
        parameters,
        precondition,
        effects,
        duration,
    })
}

pub fn parse_problem(text: &str, domain: &DomainModel) -> Result<ProblemModel, ParseError> {
    let top = single_top(text)?;
    let (name, sections) = parse_header(&top, "problem")?;
    let mut domain_name = None;
    let mut objects: Vec<(String, String)> = Vec::new();
    let mut init_expr = None;
    let mut goal_expr = None;
    let mut constraint_expr = None;
    for section in sections {
        let items = expect_list(section, "a problem section")?;
        match section.head().as_deref() {
            Some(":domain") => {
                if items.len() != 2 {
                    return Err(syntax(section.pos(), "expected (:domain <name>)"));
                }
                domain_name = Some(expect_symbol(&items[1], "a domain name")?.to_string());
            }
            Some(":objects") => objects.extend(typed_list(&items[1..])?),
            Some(":init") => init_expr = Some(&items[1..]),
            Some(":goal") => {
                if items.len() != 2 {
                    return Err(syntax(section.pos(), "expected (:goal <condition>)"));
                }
                goal_expr = Some(&items[1]);
            }
            Some(":constraints") => {
                if items.len() != 2 {
                    return Err(syntax(
                        section.pos(),
                        "expected (:constraints <constraint>)",
                    ));
                }
                constraint_expr = Some(&items[1]);
            }
            Some(":requirements") => {}
            Some(kw) => {
                return Err(syntax(
                    section.pos(),
                    format!("unsupported problem section '{kw}'"),
                ))
            }
            None => return Err(syntax(section.pos(), "expected a section keyword")),
        }
    }
    let domain_name = domain_name.ok_or_else(|| syntax(top.pos(), "missing (:domain ...)"))?;
    if domain_name != domain.name {
        return Err(semantic(
            &domain_name,
            format!(
                "problem targets domain {domain_name}, paired domain is {}",
                domain.name
            ),
        ));
    }
    let mut object_map = BTreeMap::new();
    for (o, t) in &objects {
        if object_map.insert(o.clone(), t.clone()).is_some()
            || domain.constants.iter().any(|(c, _)| c == o)
        {
            return Err(semantic(o, "duplicate object"));
        }
        if !domain.is_declared_type(t) {
            return Err(semantic(t, "undeclared type"));
        }
    }
    let scope = TermScope::Objects {
        domain,
        objects: &object_map,
    };
    let mut init = BTreeSet::new();
    for a in init_expr.unwrap_or(&[]) {
        init.insert(parse_atom(a, &scope)?);
    }
    let goal_expr = goal_expr.ok_or_else(|| syntax(top.pos(), "missing (:goal ...)"))?;
    let goal = parse_condition(goal_expr, &scope)?;
    let mut problem = ProblemModel {
        name,
        domain_name,
        objects,
        init,
        goal,
        base_constraints: Specification::default(),
    };
    if let Some(c) = constraint_expr {
        problem.base_constraints = constraints_from_expr(c, domain, &problem)?;
    }
    Ok(problem)
}

fn constraint_from_expr(
    e: &SExpr,
    scope: &TermScope<'_>,
) -> Result<TrajectoryConstraint, ParseError> {
    let items = expect_list(e, "a trajectory constraint")?;
    let head = e
        .head()
        .ok_or_else(|| syntax(e.pos(), "expected a constraint keyword"))?;
    let (kind, operands) = if head == "at" {
        if !items.get(1).is_some_and(|s| s.is_keyword("end")) {
            return Err(syntax(e.pos(), "expected (at end <condition>)"));
        }
        (ConstraintKind::AtEnd, &items[2..])
    } else {
        let kind = ConstraintKind::ALL
            .into_iter()
            .find(|k| k.keyword() == head)
            .ok_or_else(|| syntax(e.pos(), format!("unknown constraint keyword '{head}'")))?;
        (kind, &items[1..])
    };
    let nd = kind.duration_arity();
    let nc = kind.condition_arity();
    if operands.len() != nd + nc {
        return Err(syntax(
            e.pos(),
            format!(
                "{kind} takes {nd} duration(s) and {nc} condition(s), got {} operand(s)",
                operands.len()
            ),
        ));
    }
    let durations = operands[..nd]
        .iter()
        .map(|d| parse_number(d, "a duration"))
        .collect::<Result<Vec<_>, _>>()?;
    let conditions = operands[nd..]
        .iter()
        .map(|c| parse_condition(c, scope))
        .collect::<Result<Vec<_>, _>>()?;
    TrajectoryConstraint::from_parts(kind, conditions, durations).map_err(|m| syntax(e.pos(), m))
}

fn constraints_from_expr(
    e: &SExpr,
    domain: &DomainModel,
    problem: &ProblemModel,
) -> Result<Specification, ParseError> {
    let scope = TermScope::Ground { domain, problem };
    if e.head().as_deref() == Some("and") {
        let items = expect_list(e, "a constraint conjunction")?;
        items[1..]
            .iter()
            .map(|c| constraint_from_expr(c, &scope))
            .collect::<Result<Vec<_>, _>>()
            .map(Specification::new)
    } else {
        Ok(Specification::new(vec![constraint_from_expr(e, &scope)?]))
    }
}

/// Parses one atomic trajectory constraint, type-checked against the problem.
pub fn parse_constraint(
    text: &str,
    domain: &DomainModel,
    problem: &ProblemModel,
) -> Result<TrajectoryConstraint, ParseError> {
    let e = sexpr::read_one(text)?;
    constraint_from_expr(&e, &TermScope::Ground { domain, problem })
}

/// Parses a ground condition against the problem's objects.
pub fn parse_ground_condition(
    text: &str,
    domain: &DomainModel,
    problem: &ProblemModel,
) -> Result<Condition, ParseError> {
    let e = sexpr::read_one(text)?;
    parse_condition(&e, &TermScope::Ground { domain, problem })
}

/// Parses a constraints file: either `(:constraints C)`, a single `(and ...)`
/// conjunction, or a sequence of atomic constraints.
pub fn parse_specification(
    text: &str,
    domain: &DomainModel,
    problem: &ProblemModel,
) -> Result<Specification, ParseError> {
    let exprs = sexpr::read_all(text)?;
    let mut constraints = Vec::new();
    for e in &exprs {
        if e.head().as_deref() == Some(":constraints") {
            let items = expect_list(e, "a constraints block")?;
            if items.len() != 2 {
                return Err(syntax(e.pos(), "expected (:constraints <constraint>)"));
            }
            constraints.extend(constraints_from_expr(&items[1], domain, problem)?.constraints);
        } else {
            constraints.extend(constraints_from_expr(e, domain, problem)?.constraints);
        }
    }
    Ok(Specification::new(constraints))
}

/// Reads every top-level constraint expression from free text (used on
/// model responses that may wrap constraints in prose).
pub fn extract_constraints(
    text: &str,
    domain: &DomainModel,
    problem: &ProblemModel,
) -> Result<Specification, ParseError> {
    let mut found = Vec::new();
    let mut first_err = None;
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].1 == '(' {
            // find the matching close paren
            let mut depth = 0i64;
            let mut end = None;
            for (j, &(_, c)) in bytes.iter().enumerate().skip(i) {
                match c {
                    '(' => depth += 1,
                    ')' => {
                        depth -= 1;
                        if depth == 0 {
                            end = Some(j);
                            break;
                        }
                    }
                    _ => {}
                }
            }
            let Some(end) = end else { break };
            let slice = &text[bytes[i].0..bytes[end].0 + 1];
            match parse_specification(slice, domain, problem) {
                Ok(spec) => {
                    found.extend(spec.constraints);
                    i = end + 1;
                    continue;
                }
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
            i = end + 1;
        } else {
            i += 1;
        }
    }
    if found.is_empty() {
        Err(first_err
            .unwrap_or_else(|| syntax(sexpr::Pos { line: 1, col: 1 }, "no constraint found")))
    } else {
        Ok(Specification::new(found))
    }
}

/// Parses a plan file: `<time>: (<action> <args>...) [<duration>]` per line.
pub fn parse_plan(text: &str, domain: &DomainModel) -> Result<Plan, ParseError> {
    let mut steps = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let step = parse_plan_line(line).map_err(|message| ParseError::PlanLine {
            line: line_no,
            message,
        })?;
        let schema = domain
            .actions
            .iter()
            .find(|a| a.name.eq_ignore_ascii_case(&step.action))
            .ok_or_else(|| ParseError::UnknownAction {
                line: line_no,
                action: step.action.clone(),
            })?;
        if schema.parameters.len() != step.args.len() {
            return Err(ParseError::PlanLine {
                line: line_no,
                message: format!(
                    "action {} takes {} argument(s), got {}",
                    schema.name,
                    schema.parameters.len(),
                    step.args.len()
                ),
            });
        }
        steps.push(PlanStep {
            action: schema.name.clone(),
            ..step
        });
    }
    Ok(Plan::new(steps))
}

/// Parses one plan line without domain checks.
pub(crate) fn parse_plan_line(line: &str) -> Result<PlanStep, String> {
    let (time_text, rest) = line
        .split_once(':')
        .ok_or("expected '<time>: (<action> ...)'")?;
    let start = Time::parse_decimal(time_text.trim())
        .ok_or_else(|| format!("bad start time '{}'", time_text.trim()))?;
    let rest = rest.trim();
    let open = rest.strip_prefix('(').ok_or("expected '(' after time")?;
    let close = open.find(')').ok_or("missing ')'")?;
    let mut words = open[..close].split_whitespace();
    let action = words.next().ok_or("empty action")?.to_string();
    if action.contains('(') {
        return Err("nested parenthesis in action".into());
    }
    let args: Vec<String> = words.map(str::to_string).collect();
    if args.iter().any(|a| a.contains('(')) {
        return Err("nested parenthesis in action".into());
    }
    let tail = open[close + 1..].trim();
    let duration = if tail.is_empty() {
        Time::from_units(1)
    } else {
        let inner = tail
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(|| format!("expected '[<duration>]', found '{tail}'"))?;
        Time::parse_decimal(inner.trim())
            .ok_or_else(|| format!("bad duration '{}'", inner.trim()))?
    };
    Ok(PlanStep {
        start,
        action,
        args,
        duration,
    })
}
