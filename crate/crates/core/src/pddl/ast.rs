//! Object model for the supported PDDL subset.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Non-negative time value with millisecond resolution.
///
/// Plan files print three decimals and constraint durations are small
/// step counts, so a fixed-point representation is exact for every
/// value the system reads or writes and keeps `Eq`/`Hash`/`Ord` total.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct Time(u64);

impl Time {
    pub const ZERO: Time = Time(0);
    pub const MAX: Time = Time(u64::MAX / 2);

    pub const fn from_millis(ms: u64) -> Self {
        Time(ms)
    }

    pub const fn from_units(units: u64) -> Self {
        Time(units * 1000)
    }

    pub const fn millis(self) -> u64 {
        self.0
    }

    pub fn saturating_add(self, other: Time) -> Time {
        Time(self.0.saturating_add(other.0).min(Self::MAX.0))
    }

    /// Parses a non-negative decimal literal, rounding to the nearest millisecond.
    pub fn parse_decimal(text: &str) -> Option<Time> {
        let (int_part, frac_part) = match text.split_once('.') {
            Some((i, f)) => (i, f),
            None => (text, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return None;
        }
        let whole: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().ok()?
        };
        let mut frac_ms = 0u64;
        let digits = frac_part.as_bytes();
        for i in 0..3 {
            frac_ms = frac_ms * 10 + digits.get(i).map_or(0, |d| u64::from(d - b'0'));
        }
        if digits.get(3).is_some_and(|d| *d >= b'5') {
            frac_ms += 1;
        }
        let ms = whole.checked_mul(1000)?.checked_add(frac_ms)?;
        (ms <= Self::MAX.0).then_some(Time(ms))
    }

    /// Renders with exactly three decimals, the plan-file convention.
    pub fn fixed3(self) -> String {
        format!("{}.{:03}", self.0 / 1000, self.0 % 1000)
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / 1000;
        let frac = self.0 % 1000;
        if frac == 0 {
            write!(f, "{whole}")
        } else {
            let s = format!("{frac:03}");
            write!(f, "{whole}.{}", s.trim_end_matches('0'))
        }
    }
}

/// A predicate applied to terms. Terms starting with `?` are variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new(
        predicate: impl Into<String>,
        args: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        Atom {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|a| !a.starts_with('?'))
    }

    /// Replaces variables using `binding`; unbound variables are kept.
    pub fn substitute(&self, binding: &BTreeMap<String, String>) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self
                .args
                .iter()
                .map(|a| binding.get(a).cloned().unwrap_or_else(|| a.clone()))
                .collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// Logical condition over atoms: atoms, negation and binary conjunction/disjunction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    Atom(Atom),
    Not(Box<Condition>),
    And(Box<Condition>, Box<Condition>),
    Or(Box<Condition>, Box<Condition>),
}

impl Condition {
    pub fn atom(
        predicate: impl Into<String>,
        args: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        Condition::Atom(Atom::new(predicate, args))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Condition) -> Self {
        Condition::Not(Box::new(inner))
    }

    pub fn and(a: Condition, b: Condition) -> Self {
        Condition::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Condition, b: Condition) -> Self {
        Condition::Or(Box::new(a), Box::new(b))
    }

    /// Logical negation that cancels an outer `not` instead of stacking one.
    pub fn negated(&self) -> Condition {
        match self {
            Condition::Not(inner) => (**inner).clone(),
            other => Condition::not(other.clone()),
        }
    }

    pub fn eval(&self, holds: &mut impl FnMut(&Atom) -> bool) -> bool {
        match self {
            Condition::Atom(a) => holds(a),
            Condition::Not(c) => !c.eval(holds),
            Condition::And(a, b) => a.eval(holds) && b.eval(holds),
            Condition::Or(a, b) => a.eval(holds) || b.eval(holds),
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Condition::Atom(a) => out.push(a),
            Condition::Not(c) => c.collect_atoms(out),
            Condition::And(a, b) | Condition::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    pub fn atoms_mut(&mut self) -> Vec<&mut Atom> {
        let mut out = Vec::new();
        self.collect_atoms_mut(&mut out);
        out
    }

    fn collect_atoms_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Atom>) {
        match self {
            Condition::Atom(a) => out.push(a),
            Condition::Not(c) => c.collect_atoms_mut(out),
            Condition::And(a, b) | Condition::Or(a, b) => {
                a.collect_atoms_mut(out);
                b.collect_atoms_mut(out);
            }
        }
    }

    pub fn substitute(&self, binding: &BTreeMap<String, String>) -> Condition {
        match self {
            Condition::Atom(a) => Condition::Atom(a.substitute(binding)),
            Condition::Not(c) => Condition::not(c.substitute(binding)),
            Condition::And(a, b) => Condition::and(a.substitute(binding), b.substitute(binding)),
            Condition::Or(a, b) => Condition::or(a.substitute(binding), b.substitute(binding)),
        }
    }

    /// Folds a list into right-nested conjunctions. `None` when empty.
    pub fn conjunction(mut items: Vec<Condition>) -> Option<Condition> {
        let mut acc = items.pop()?;
        while let Some(prev) = items.pop() {
            acc = Condition::and(prev, acc);
        }
        Some(acc)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Atom(a) => write!(f, "{a}"),
            Condition::Not(c) => write!(f, "(not {c})"),
            Condition::And(a, b) => write!(f, "(and {a} {b})"),
            Condition::Or(a, b) => write!(f, "(or {a} {b})"),
        }
    }
}

/// Signed literal used in action effects.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub positive: bool,
    pub atom: Atom,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

/// The ten trajectory-constraint forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstraintKind {
    Always,
    Sometime,
    Within,
    AtMostOnce,
    SometimeAfter,
    SometimeBefore,
    AlwaysWithin,
    HoldDuring,
    HoldAfter,
    AtEnd,
}

impl ConstraintKind {
    pub const ALL: [ConstraintKind; 10] = [
        ConstraintKind::Always,
        ConstraintKind::Sometime,
        ConstraintKind::Within,
        ConstraintKind::AtMostOnce,
        ConstraintKind::SometimeAfter,
        ConstraintKind::SometimeBefore,
        ConstraintKind::AlwaysWithin,
        ConstraintKind::HoldDuring,
        ConstraintKind::HoldAfter,
        ConstraintKind::AtEnd,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            ConstraintKind::Always => "always",
            ConstraintKind::Sometime => "sometime",
            ConstraintKind::Within => "within",
            ConstraintKind::AtMostOnce => "at-most-once",
            ConstraintKind::SometimeAfter => "sometime-after",
            ConstraintKind::SometimeBefore => "sometime-before",
            ConstraintKind::AlwaysWithin => "always-within",
            ConstraintKind::HoldDuring => "hold-during",
            ConstraintKind::HoldAfter => "hold-after",
            ConstraintKind::AtEnd => "at end",
        }
    }

    pub fn condition_arity(self) -> usize {
        match self {
            ConstraintKind::SometimeAfter | ConstraintKind::SometimeBefore => 2,
            _ => 1,
        }
    }

    pub fn duration_arity(self) -> usize {
        match self {
            ConstraintKind::Within | ConstraintKind::AlwaysWithin | ConstraintKind::HoldAfter => 1,
            ConstraintKind::HoldDuring => 2,
            _ => 0,
        }
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// One atomic state-trajectory constraint.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TrajectoryConstraint {
    Always(Condition),
    Sometime(Condition),
    Within(Time, Condition),
    AtMostOnce(Condition),
    SometimeAfter(Condition, Condition),
    SometimeBefore(Condition, Condition),
    AlwaysWithin(Time, Condition),
    HoldDuring(Time, Time, Condition),
    HoldAfter(Time, Condition),
    AtEnd(Condition),
}

impl TrajectoryConstraint {
    pub fn kind(&self) -> ConstraintKind {
        match self {
            TrajectoryConstraint::Always(_) => ConstraintKind::Always,
            TrajectoryConstraint::Sometime(_) => ConstraintKind::Sometime,
            TrajectoryConstraint::Within(..) => ConstraintKind::Within,
            TrajectoryConstraint::AtMostOnce(_) => ConstraintKind::AtMostOnce,
            TrajectoryConstraint::SometimeAfter(..) => ConstraintKind::SometimeAfter,
            TrajectoryConstraint::SometimeBefore(..) => ConstraintKind::SometimeBefore,
            TrajectoryConstraint::AlwaysWithin(..) => ConstraintKind::AlwaysWithin,
            TrajectoryConstraint::HoldDuring(..) => ConstraintKind::HoldDuring,
            TrajectoryConstraint::HoldAfter(..) => ConstraintKind::HoldAfter,
            TrajectoryConstraint::AtEnd(_) => ConstraintKind::AtEnd,
        }
    }

    /// Builds a constraint from a tag and operand lists, checking arities
    /// and the `hold-during` ordering.
    pub fn from_parts(
        kind: ConstraintKind,
        mut conditions: Vec<Condition>,
        durations: Vec<Time>,
    ) -> Result<Self, String> {
        if conditions.len() != kind.condition_arity() {
            return Err(format!(
                "{} takes {} condition(s), got {}",
                kind,
                kind.condition_arity(),
                conditions.len()
            ));
        }
        if durations.len() != kind.duration_arity() {
            return Err(format!(
                "{} takes {} duration(s), got {}",
                kind,
                kind.duration_arity(),
                durations.len()
            ));
        }
        let second = if conditions.len() == 2 {
            conditions.pop()
        } else {
            None
        };
        let first = conditions.pop().expect("arity checked");
        Ok(match kind {
            ConstraintKind::Always => TrajectoryConstraint::Always(first),
            ConstraintKind::Sometime => TrajectoryConstraint::Sometime(first),
            ConstraintKind::Within => TrajectoryConstraint::Within(durations[0], first),
            ConstraintKind::AtMostOnce => TrajectoryConstraint::AtMostOnce(first),
            ConstraintKind::SometimeAfter => {
                TrajectoryConstraint::SometimeAfter(first, second.expect("arity checked"))
            }
            ConstraintKind::SometimeBefore => {
                TrajectoryConstraint::SometimeBefore(first, second.expect("arity checked"))
            }
            ConstraintKind::AlwaysWithin => TrajectoryConstraint::AlwaysWithin(durations[0], first),
            ConstraintKind::HoldDuring => {
                if durations[0] >= durations[1] {
                    return Err(format!(
                        "hold-during needs start < end, got {} and {}",
                        durations[0], durations[1]
                    ));
                }
                TrajectoryConstraint::HoldDuring(durations[0], durations[1], first)
            }
            ConstraintKind::HoldAfter => TrajectoryConstraint::HoldAfter(durations[0], first),
            ConstraintKind::AtEnd => TrajectoryConstraint::AtEnd(first),
        })
    }

    pub fn conditions(&self) -> Vec<&Condition> {
        use TrajectoryConstraint::*;
        match self {
            Always(c)
            | Sometime(c)
            | Within(_, c)
            | AtMostOnce(c)
            | AlwaysWithin(_, c)
            | HoldDuring(_, _, c)
            | HoldAfter(_, c)
            | AtEnd(c) => vec![c],
            SometimeAfter(a, b) | SometimeBefore(a, b) => vec![a, b],
        }
    }

    pub fn conditions_mut(&mut self) -> Vec<&mut Condition> {
        use TrajectoryConstraint::*;
        match self {
            Always(c)
            | Sometime(c)
            | Within(_, c)
            | AtMostOnce(c)
            | AlwaysWithin(_, c)
            | HoldDuring(_, _, c)
            | HoldAfter(_, c)
            | AtEnd(c) => vec![c],
            SometimeAfter(a, b) | SometimeBefore(a, b) => vec![a, b],
        }
    }

    pub fn durations(&self) -> Vec<Time> {
        use TrajectoryConstraint::*;
        match self {
            Within(d, _) | AlwaysWithin(d, _) | HoldAfter(d, _) => vec![*d],
            HoldDuring(a, b, _) => vec![*a, *b],
            _ => Vec::new(),
        }
    }

    pub fn into_conditions(self) -> Vec<Condition> {
        use TrajectoryConstraint::*;
        match self {
            Always(c)
            | Sometime(c)
            | Within(_, c)
            | AtMostOnce(c)
            | AlwaysWithin(_, c)
            | HoldDuring(_, _, c)
            | HoldAfter(_, c)
            | AtEnd(c) => vec![c],
            SometimeAfter(a, b) | SometimeBefore(a, b) => vec![a, b],
        }
    }
}

impl fmt::Display for TrajectoryConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.kind().keyword())?;
        for d in self.durations() {
            write!(f, " {d}")?;
        }
        for c in self.conditions() {
            write!(f, " {c}")?;
        }
        write!(f, ")")
    }
}

/// Ordered conjunction of trajectory constraints.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Specification {
    pub constraints: Vec<TrajectoryConstraint>,
}

impl Specification {
    pub fn new(constraints: Vec<TrajectoryConstraint>) -> Self {
        Specification { constraints }
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TrajectoryConstraint> {
        self.constraints.iter()
    }

    /// Canonical text: the constraints block. Defines genotype identity.
    pub fn canonical(&self) -> String {
        super::render::render_specification(self)
    }
}

impl FromIterator<TrajectoryConstraint> for Specification {
    fn from_iter<T: IntoIterator<Item = TrajectoryConstraint>>(iter: T) -> Self {
        Specification::new(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a Specification {
    type Item = &'a TrajectoryConstraint;
    type IntoIter = std::slice::Iter<'a, TrajectoryConstraint>;
    fn into_iter(self) -> Self::IntoIter {
        self.constraints.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TypedParam {
    pub name: String,
    pub type_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TypeDecl {
    pub name: String,
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PredicateSignature {
    pub name: String,
    pub parameters: Vec<TypedParam>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionSchema {
    pub name: String,
    pub parameters: Vec<TypedParam>,
    pub precondition: Option<Condition>,
    pub effects: Vec<Literal>,
    pub duration: Time,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainModel {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: Vec<TypeDecl>,
    pub constants: Vec<(String, String)>,
    pub predicates: Vec<PredicateSignature>,
    pub actions: Vec<ActionSchema>,
}

pub const ROOT_TYPE: &str = "object";

impl DomainModel {
    pub fn predicate(&self, name: &str) -> Option<&PredicateSignature> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn is_declared_type(&self, name: &str) -> bool {
        name == ROOT_TYPE || self.types.iter().any(|t| t.name == name)
    }

    /// True when `sub` equals `sup` or inherits from it.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        if sup == ROOT_TYPE {
            return true;
        }
        let mut current = sub;
        for _ in 0..=self.types.len() {
            if current == sup {
                return true;
            }
            match self
                .types
                .iter()
                .find(|t| t.name == current)
                .and_then(|t| t.parent.as_deref())
            {
                Some(parent) => current = parent,
                None => return false,
            }
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemModel {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<(String, String)>,
    pub init: BTreeSet<Atom>,
    pub goal: Condition,
    pub base_constraints: Specification,
}

impl ProblemModel {
    /// Type of a problem object or domain constant.
    pub fn object_type<'a>(&'a self, domain: &'a DomainModel, name: &str) -> Option<&'a str> {
        self.objects
            .iter()
            .chain(domain.constants.iter())
            .find(|(o, _)| o == name)
            .map(|(_, t)| t.as_str())
    }

    /// Objects (including domain constants) whose type is compatible with `type_name`,
    /// in declaration order.
    pub fn objects_of_type<'a>(&'a self, domain: &'a DomainModel, type_name: &str) -> Vec<&'a str> {
        domain
            .constants
            .iter()
            .chain(self.objects.iter())
            .filter(|(_, t)| domain.is_subtype(t, type_name))
            .map(|(o, _)| o.as_str())
            .collect()
    }
}

/// One timed, ground action occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanStep {
    pub start: Time,
    pub action: String,
    pub args: Vec<String>,
    pub duration: Time,
}

impl PlanStep {
    pub fn symbolic(&self) -> String {
        let mut s = format!("({}", self.action);
        for a in &self.args {
            s.push(' ');
            s.push_str(a);
        }
        s.push(')');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
}

impl Plan {
    pub fn new(mut steps: Vec<PlanStep>) -> Self {
        // stable: equal start times keep their input order
        steps.sort_by_key(|s| s.start);
        Plan { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Sequential unit-duration plan, step `i` starting at time `i`.
    pub fn sequential(actions: impl IntoIterator<Item = (String, Vec<String>)>) -> Self {
        Plan {
            steps: actions
                .into_iter()
                .enumerate()
                .map(|(i, (action, args))| PlanStep {
                    start: Time::from_units(i as u64),
                    action,
                    args,
                    duration: Time::from_units(1),
                })
                .collect(),
        }
    }
}
