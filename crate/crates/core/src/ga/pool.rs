//! Candidate atomic constraints for a problem.
//!
//! The pool is every constraint variant instantiated over single ground
//! literals of fluent predicates, with durations drawn from `1..=horizon`.
//! It is indexed lazily: `get(i)` builds the i-th member on demand, so the
//! quadratic two-condition part never sits in memory.

use std::collections::BTreeMap;

use rand::Rng;

use crate::pddl::{
    Atom, Condition, ConstraintKind, DomainModel, ProblemModel, Time, TrajectoryConstraint,
};

#[derive(Debug, Clone)]
pub struct ConstraintPool {
    /// Positive atoms first, each followed by its negation.
    literals: Vec<Condition>,
    horizon: u64,
    /// Type-compatible objects per (predicate, parameter position).
    compatible: BTreeMap<(String, usize), Vec<String>>,
}

/// Number of (d1, d2) pairs with 1 <= d1 < d2 <= h.
fn pair_count(h: u64) -> u64 {
    h * h.saturating_sub(1) / 2
}

fn nth_pair(h: u64, mut i: u64) -> (u64, u64) {
    for d1 in 1..h {
        let row = h - d1;
        if i < row {
            return (d1, d1 + 1 + i);
        }
        i -= row;
    }
    unreachable!("pair index out of range")
}

impl ConstraintPool {
    /// Enumerates the pool for `problem`. Static predicates (never touched by
    /// an effect) are left out: their truth is fixed by the initial state.
    pub fn enumerate(domain: &DomainModel, problem: &ProblemModel, horizon: u64) -> ConstraintPool {
        let fluent: Vec<&str> = domain
            .predicates
            .iter()
            .map(|p| p.name.as_str())
            .filter(|name| {
                domain
                    .actions
                    .iter()
                    .any(|a| a.effects.iter().any(|e| e.atom.predicate == *name))
            })
            .collect();
        let mut literals = Vec::new();
        let mut compatible = BTreeMap::new();
        for pred in domain
            .predicates
            .iter()
            .filter(|p| fluent.contains(&p.name.as_str()))
        {
            let mut tuples: Vec<Vec<String>> = vec![Vec::new()];
            for (i, param) in pred.parameters.iter().enumerate() {
                let objs: Vec<String> = problem
                    .objects_of_type(domain, &param.type_name)
                    .into_iter()
                    .map(str::to_string)
                    .collect();
                compatible.insert((pred.name.clone(), i), objs.clone());
                tuples = tuples
                    .into_iter()
                    .flat_map(|t| {
                        objs.iter().map(move |o| {
                            let mut t = t.clone();
                            t.push(o.clone());
                            t
                        })
                    })
                    .collect();
            }
            for args in tuples {
                let atom = Condition::Atom(Atom::new(pred.name.clone(), args));
                let negated = atom.negated();
                literals.push(atom);
                literals.push(negated);
            }
        }
        ConstraintPool {
            literals,
            horizon: horizon.max(2),
            compatible,
        }
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn literals(&self) -> &[Condition] {
        &self.literals
    }

    /// Objects that may stand at `position` of `predicate`.
    pub fn compatible(&self, predicate: &str, position: usize) -> &[String] {
        self.compatible
            .get(&(predicate.to_string(), position))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    fn per_kind(&self, kind: ConstraintKind) -> u64 {
        let l = self.literals.len() as u64;
        let conds = if kind.condition_arity() == 2 {
            l * l
        } else {
            l
        };
        let durs = match kind.duration_arity() {
            0 => 1,
            1 => self.horizon,
            _ => pair_count(self.horizon),
        };
        conds * durs
    }

    pub fn len(&self) -> u64 {
        ConstraintKind::ALL.iter().map(|k| self.per_kind(*k)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    /// Pool member `i` in enumeration order (by variant, then durations,
    /// then literals).
    pub fn get(&self, mut i: u64) -> Option<TrajectoryConstraint> {
        for kind in ConstraintKind::ALL {
            let n = self.per_kind(kind);
            if i < n {
                return Some(self.build(kind, i));
            }
            i -= n;
        }
        None
    }

    fn build(&self, kind: ConstraintKind, i: u64) -> TrajectoryConstraint {
        let l = self.literals.len() as u64;
        let conds_n = if kind.condition_arity() == 2 {
            l * l
        } else {
            l
        };
        let (dur_ix, cond_ix) = (i / conds_n, i % conds_n);
        let conds = if kind.condition_arity() == 2 {
            vec![
                self.literals[(cond_ix / l) as usize].clone(),
                self.literals[(cond_ix % l) as usize].clone(),
            ]
        } else {
            vec![self.literals[cond_ix as usize].clone()]
        };
        let durs = match kind.duration_arity() {
            0 => vec![],
            1 => vec![Time::from_units(dur_ix + 1)],
            _ => {
                let (a, b) = nth_pair(self.horizon, dur_ix);
                vec![Time::from_units(a), Time::from_units(b)]
            }
        };
        TrajectoryConstraint::from_parts(kind, conds, durs).expect("pool members are well formed")
    }

    pub fn sample_literal(&self, rng: &mut impl Rng) -> Condition {
        self.literals[rng.random_range(0..self.literals.len())].clone()
    }

    /// Durations fitting `kind`, drawn uniformly.
    pub fn sample_durations(&self, kind: ConstraintKind, rng: &mut impl Rng) -> Vec<Time> {
        match kind.duration_arity() {
            0 => vec![],
            1 => vec![Time::from_units(rng.random_range(1..=self.horizon))],
            _ => {
                let (a, b) = nth_pair(self.horizon, rng.random_range(0..pair_count(self.horizon)));
                vec![Time::from_units(a), Time::from_units(b)]
            }
        }
    }

    /// Uniform variant, then uniform literals and durations for it.
    pub fn sample(&self, rng: &mut impl Rng) -> TrajectoryConstraint {
        let kind = ConstraintKind::ALL[rng.random_range(0..ConstraintKind::ALL.len())];
        self.sample_of_kind(kind, rng)
    }

    pub fn sample_of_kind(&self, kind: ConstraintKind, rng: &mut impl Rng) -> TrajectoryConstraint {
        let conds = (0..kind.condition_arity())
            .map(|_| self.sample_literal(rng))
            .collect();
        let durs = self.sample_durations(kind, rng);
        TrajectoryConstraint::from_parts(kind, conds, durs).expect("sampled parts are well formed")
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::pddl::{parse_domain, parse_problem};

    fn tiny() -> (DomainModel, ProblemModel) {
        let d = parse_domain(
            "(define (domain t) (:types thing) (:predicates (p ?x - thing) (q))
              (:action flip :parameters (?x - thing) :precondition (q) :effect (p ?x)))",
        )
        .unwrap();
        let p = parse_problem(
            "(define (problem t1) (:domain t) (:objects a - thing) (:init (q)) (:goal (p a)))",
            &d,
        )
        .unwrap();
        (d, p)
    }

    #[test]
    fn always_entries_for_single_atom() {
        let (d, p) = tiny();
        let pool = ConstraintPool::enumerate(&d, &p, 2);
        let always: Vec<String> = (0..pool.len())
            .filter_map(|i| pool.get(i))
            .filter(|c| c.kind() == ConstraintKind::Always)
            .map(|c| c.to_string())
            .collect();
        assert_eq!(always, ["(always (p a))", "(always (not (p a)))"]);
        // static (q) is not pooled
        assert_eq!(pool.literals().len(), 2);
    }

    #[test]
    fn enumeration_is_duplicate_free_and_sized() {
        let (d, p) = tiny();
        let pool = ConstraintPool::enumerate(&d, &p, 3);
        let texts: HashSet<String> = (0..pool.len())
            .map(|i| pool.get(i).unwrap().to_string())
            .collect();
        assert_eq!(texts.len() as u64, pool.len());
        assert!(pool.get(pool.len()).is_none());
        let expected = 2 + 2 + 2 * 3 + 2 + 4 + 4 + 2 * 3 + 2 * 3 + 2 * 3 + 2;
        assert_eq!(pool.len(), expected);
    }

    #[test]
    fn sampling_is_seeded() {
        let (d, p) = tiny();
        let pool = ConstraintPool::enumerate(&d, &p, 5);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|_| pool.sample(&mut rng).to_string())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(4), draw(4));
        assert_ne!(draw(4), draw(5));
    }
}
