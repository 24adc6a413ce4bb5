//! Grounding of typed action schemas into a propositional task.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::pddl::{Atom, Condition, DomainModel, ProblemModel};

/// Packed truth assignment over the task's fluent atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct BitState(Box<[u64]>);

impl BitState {
    pub(crate) fn empty(bits: usize) -> Self {
        BitState(vec![0; bits.div_ceil(64).max(1)].into_boxed_slice())
    }

    #[inline]
    pub(crate) fn get(&self, ix: u32) -> bool {
        self.0[(ix / 64) as usize] & (1 << (ix % 64)) != 0
    }

    #[inline]
    pub(crate) fn set(&mut self, ix: u32, value: bool) {
        let word = &mut self.0[(ix / 64) as usize];
        if value {
            *word |= 1 << (ix % 64);
        } else {
            *word &= !(1 << (ix % 64));
        }
    }
}

/// Condition compiled against the fluent atom table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Cond {
    Const(bool),
    Bit(u32),
    Not(Box<Cond>),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
}

impl Cond {
    #[inline]
    pub(crate) fn eval(&self, s: &BitState) -> bool {
        match self {
            Cond::Const(b) => *b,
            Cond::Bit(i) => s.get(*i),
            Cond::Not(c) => !c.eval(s),
            Cond::And(a, b) => a.eval(s) && b.eval(s),
            Cond::Or(a, b) => a.eval(s) || b.eval(s),
        }
    }

    fn simplify(self) -> Cond {
        match self {
            Cond::Not(c) => match c.simplify() {
                Cond::Const(b) => Cond::Const(!b),
                other => Cond::Not(Box::new(other)),
            },
            Cond::And(a, b) => match (a.simplify(), b.simplify()) {
                (Cond::Const(false), _) | (_, Cond::Const(false)) => Cond::Const(false),
                (Cond::Const(true), x) | (x, Cond::Const(true)) => x,
                (x, y) => Cond::And(Box::new(x), Box::new(y)),
            },
            Cond::Or(a, b) => match (a.simplify(), b.simplify()) {
                (Cond::Const(true), _) | (_, Cond::Const(true)) => Cond::Const(true),
                (Cond::Const(false), x) | (x, Cond::Const(false)) => x,
                (x, y) => Cond::Or(Box::new(x), Box::new(y)),
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct GroundAction {
    pub(crate) name: String,
    pub(crate) args: Vec<String>,
    pub(crate) pre: Cond,
    pub(crate) add: Vec<u32>,
    pub(crate) del: Vec<u32>,
}

impl GroundAction {
    pub(crate) fn apply(&self, s: &BitState) -> BitState {
        let mut next = s.clone();
        for &d in &self.del {
            next.set(d, false);
        }
        for &a in &self.add {
            next.set(a, true);
        }
        next
    }
}

#[derive(Debug, Clone)]
pub(crate) struct GroundTask {
    index: HashMap<Atom, u32>,
    /// Truth of atoms outside the fluent table (fixed for the whole search).
    constant_true: HashSet<Atom>,
    pub(crate) init: BitState,
    /// Sorted by canonical `(name args...)` text.
    pub(crate) actions: Vec<GroundAction>,
}

/// One ground instance of a schema before compilation.
struct Instance {
    name: String,
    args: Vec<String>,
    pre: Option<Condition>,
    add: Vec<Atom>,
    del: Vec<Atom>,
}

fn substitutions(domain: &DomainModel, problem: &ProblemModel, types: &[&str]) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = vec![Vec::new()];
    for ty in types {
        let candidates = problem.objects_of_type(domain, ty);
        let mut next = Vec::with_capacity(out.len() * candidates.len());
        for prefix in &out {
            for c in &candidates {
                let mut v = prefix.clone();
                v.push((*c).to_string());
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Three-valued partial evaluation: `known` maps atoms with a fixed truth value.
fn partial(c: &Condition, known: &dyn Fn(&Atom) -> Option<bool>) -> Option<bool> {
    match c {
        Condition::Atom(a) => known(a),
        Condition::Not(c) => partial(c, known).map(|b| !b),
        Condition::And(a, b) => match (partial(a, known), partial(b, known)) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        },
        Condition::Or(a, b) => match (partial(a, known), partial(b, known)) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        },
    }
}

impl GroundTask {
    pub(crate) fn new(domain: &DomainModel, problem: &ProblemModel) -> GroundTask {
        let fluent_predicates: BTreeSet<&str> = domain
            .actions
            .iter()
            .flat_map(|a| a.effects.iter().map(|e| e.atom.predicate.as_str()))
            .collect();
        let is_static = |a: &Atom| !fluent_predicates.contains(a.predicate.as_str());

        let mut instances = Vec::new();
        for schema in &domain.actions {
            let types: Vec<&str> = schema
                .parameters
                .iter()
                .map(|p| p.type_name.as_str())
                .collect();
            for args in substitutions(domain, problem, &types) {
                let binding: BTreeMap<String, String> = schema
                    .parameters
                    .iter()
                    .map(|p| p.name.clone())
                    .zip(args.iter().cloned())
                    .collect();
                let pre = schema.precondition.as_ref().map(|c| c.substitute(&binding));
                let static_known = |a: &Atom| is_static(a).then(|| problem.init.contains(a));
                if pre.as_ref().and_then(|c| partial(c, &static_known)) == Some(false) {
                    continue;
                }
                let (mut add, mut del) = (Vec::new(), Vec::new());
                for e in &schema.effects {
                    let atom = e.atom.substitute(&binding);
                    if e.positive {
                        add.push(atom);
                    } else {
                        del.push(atom);
                    }
                }
                instances.push(Instance {
                    name: schema.name.clone(),
                    args,
                    pre,
                    add,
                    del,
                });
            }
        }

        // atoms of fluent predicates that are neither initially true nor added
        // by any surviving action can never hold
        let achievable: HashSet<&Atom> = problem
            .init
            .iter()
            .chain(instances.iter().flat_map(|i| i.add.iter()))
            .collect();
        let fixed = |a: &Atom| -> Option<bool> {
            if is_static(a) {
                Some(problem.init.contains(a))
            } else if !achievable.contains(a) {
                Some(false)
            } else {
                None
            }
        };
        let keep: Vec<bool> = instances
            .iter()
            .map(|i| i.pre.as_ref().and_then(|c| partial(c, &fixed)) != Some(false))
            .collect();
        let mut keep = keep.into_iter();
        instances.retain(|_| keep.next().unwrap_or(false));

        let mut fluents: BTreeSet<Atom> = problem
            .init
            .iter()
            .filter(|a| !is_static(a))
            .cloned()
            .collect();
        for i in &instances {
            fluents.extend(i.add.iter().cloned());
            fluents.extend(i.del.iter().cloned());
        }
        let index: HashMap<Atom, u32> = fluents
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, a)| (a, i as u32))
            .collect();
        let constant_true: HashSet<Atom> = problem
            .init
            .iter()
            .filter(|a| !index.contains_key(*a))
            .cloned()
            .collect();
        let n_atoms = index.len();
        let mut init = BitState::empty(n_atoms);
        for a in &problem.init {
            if let Some(&ix) = index.get(a) {
                init.set(ix, true);
            }
        }
        let mut task = GroundTask {
            index,
            constant_true,
            init,
            actions: Vec::new(),
        };
        let mut actions: Vec<(String, GroundAction)> = instances
            .into_iter()
            .filter_map(|i| {
                let pre = i
                    .pre
                    .as_ref()
                    .map_or(Cond::Const(true), |c| task.compile(c));
                if pre == Cond::Const(false) {
                    return None;
                }
                let add = i.add.iter().map(|a| task.index[a]).collect();
                let del = i.del.iter().map(|a| task.index[a]).collect();
                let text = format!("({} {})", i.name, i.args.join(" "));
                Some((
                    text,
                    GroundAction {
                        name: i.name,
                        args: i.args,
                        pre,
                        add,
                        del,
                    },
                ))
            })
            .collect();
        actions.sort_by(|a, b| a.0.cmp(&b.0));
        task.actions = actions.into_iter().map(|(_, a)| a).collect();
        task
    }

    /// Compiles a ground condition. Atoms outside the fluent table keep
    /// their initial truth value forever.
    pub(crate) fn compile(&self, c: &Condition) -> Cond {
        let raw = self.compile_raw(c);
        raw.simplify()
    }

    fn compile_raw(&self, c: &Condition) -> Cond {
        match c {
            Condition::Atom(a) => match self.index.get(a) {
                Some(&ix) => Cond::Bit(ix),
                None => Cond::Const(self.constant_true.contains(a)),
            },
            Condition::Not(c) => Cond::Not(Box::new(self.compile_raw(c))),
            Condition::And(a, b) => {
                Cond::And(Box::new(self.compile_raw(a)), Box::new(self.compile_raw(b)))
            }
            Condition::Or(a, b) => {
                Cond::Or(Box::new(self.compile_raw(a)), Box::new(self.compile_raw(b)))
            }
        }
    }
}
