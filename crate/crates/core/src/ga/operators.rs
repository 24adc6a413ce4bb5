//! Mutation and crossover over specifications.

use rand::Rng;

use crate::pddl::{ConstraintKind, Specification, TrajectoryConstraint};

use super::pool::ConstraintPool;

/// Which branch of the mutation operator produced a child.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MutationTag {
    Add,
    Remove,
    Negate,
    Resample,
    ChangeArgument,
    Duplicate,
}

impl MutationTag {
    pub fn as_str(self) -> &'static str {
        match self {
            MutationTag::Add => "add",
            MutationTag::Remove => "remove",
            MutationTag::Negate => "negate",
            MutationTag::Resample => "resample",
            MutationTag::ChangeArgument => "change-argument",
            MutationTag::Duplicate => "duplicate",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MutationOptions {
    /// Adds a fourth branch: copy a constraint and modify the copy.
    pub duplicate_branch: bool,
}

pub fn mutate(spec: &Specification, pool: &ConstraintPool, rng: &mut impl Rng) -> Specification {
    mutate_tagged(spec, pool, rng, MutationOptions::default()).0
}

/// Applies exactly one mutation. `spec` must be non-empty.
pub fn mutate_tagged(
    spec: &Specification,
    pool: &ConstraintPool,
    rng: &mut impl Rng,
    opts: MutationOptions,
) -> (Specification, MutationTag) {
    assert!(!spec.is_empty(), "mutation needs at least one constraint");
    let mut items = spec.constraints.clone();
    let branches = if opts.duplicate_branch { 4 } else { 3 };
    let tag = match rng.random_range(0..branches) {
        0 => {
            items.push(pool.sample(rng));
            MutationTag::Add
        }
        1 if items.len() > 1 => {
            let j = rng.random_range(0..items.len());
            items.remove(j);
            MutationTag::Remove
        }
        3 => {
            let j = rng.random_range(0..items.len());
            let (copy, _) = modify(&items[j], pool, rng);
            items.push(copy);
            MutationTag::Duplicate
        }
        // remove on a singleton falls through to modify
        _ => {
            let j = rng.random_range(0..items.len());
            let (c, tag) = modify(&items[j], pool, rng);
            items[j] = c;
            tag
        }
    };
    (Specification::new(items), tag)
}

fn modify(
    c: &TrajectoryConstraint,
    pool: &ConstraintPool,
    rng: &mut impl Rng,
) -> (TrajectoryConstraint, MutationTag) {
    match rng.random_range(0..3) {
        0 => (negate(c, rng), MutationTag::Negate),
        1 => (resample_kind(c, pool, rng), MutationTag::Resample),
        _ => match change_argument(c, pool, rng) {
            Some(changed) => (changed, MutationTag::ChangeArgument),
            // nothing can be swapped for a compatible object
            None => (negate(c, rng), MutationTag::Negate),
        },
    }
}

fn negate(c: &TrajectoryConstraint, rng: &mut impl Rng) -> TrajectoryConstraint {
    let mut out = c.clone();
    let mut conds = out.conditions_mut();
    let j = rng.random_range(0..conds.len());
    *conds[j] = conds[j].negated();
    out
}

fn resample_kind(
    c: &TrajectoryConstraint,
    pool: &ConstraintPool,
    rng: &mut impl Rng,
) -> TrajectoryConstraint {
    let others: Vec<ConstraintKind> = ConstraintKind::ALL
        .into_iter()
        .filter(|k| *k != c.kind())
        .collect();
    let kind = others[rng.random_range(0..others.len())];
    let durations = if c.durations().len() == kind.duration_arity() {
        c.durations()
    } else {
        pool.sample_durations(kind, rng)
    };
    let mut conds = c.clone().into_conditions();
    conds.truncate(kind.condition_arity());
    while conds.len() < kind.condition_arity() {
        conds.push(pool.sample_literal(rng));
    }
    TrajectoryConstraint::from_parts(kind, conds, durations)
        .expect("arity adjusted to the new variant")
}

fn change_argument(
    c: &TrajectoryConstraint,
    pool: &ConstraintPool,
    rng: &mut impl Rng,
) -> Option<TrajectoryConstraint> {
    // (condition, atom, position) triples that have an alternative object
    let mut sites = Vec::new();
    for (ci, cond) in c.conditions().iter().enumerate() {
        for (ai, atom) in cond.atoms().iter().enumerate() {
            for (pi, arg) in atom.args.iter().enumerate() {
                if pool
                    .compatible(&atom.predicate, pi)
                    .iter()
                    .any(|o| o != arg)
                {
                    sites.push((ci, ai, pi));
                }
            }
        }
    }
    if sites.is_empty() {
        return None;
    }
    let (ci, ai, pi) = sites[rng.random_range(0..sites.len())];
    let mut out = c.clone();
    let mut conds = out.conditions_mut();
    let mut atoms = conds[ci].atoms_mut();
    let atom = &mut atoms[ai];
    let choices: Vec<&String> = pool
        .compatible(&atom.predicate, pi)
        .iter()
        .filter(|o| **o != atom.args[pi])
        .collect();
    atom.args[pi] = choices[rng.random_range(0..choices.len())].clone();
    Some(out)
}

/// One-point crossover at a shared cut `p` in `1..=min(|a|, |b|)`:
/// children are `a[..p-1] ++ b[p-1..]` and `b[..p-1] ++ a[p-1..]`.
pub fn crossover(
    a: &Specification,
    b: &Specification,
    rng: &mut impl Rng,
) -> (Specification, Specification) {
    assert!(
        !a.is_empty() && !b.is_empty(),
        "crossover needs non-empty parents"
    );
    let p = rng.random_range(1..=a.len().min(b.len()));
    crossover_at(a, b, p)
}

pub fn crossover_at(
    a: &Specification,
    b: &Specification,
    p: usize,
) -> (Specification, Specification) {
    let cut = p - 1;
    let c1 = a.constraints[..cut]
        .iter()
        .chain(&b.constraints[cut..])
        .cloned()
        .collect();
    let c2 = b.constraints[..cut]
        .iter()
        .chain(&a.constraints[cut..])
        .cloned()
        .collect();
    (c1, c2)
}
