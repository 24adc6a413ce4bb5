//! Incremental constraint monitors used to prune the built-in search.
//!
//! Each monitor keeps one integer of progress. `observe` is fed the
//! snapshots of a trajectory in order and reports a dead prefix as soon as
//! no extension can satisfy the constraint; `accepts` decides the constraint
//! once the trajectory ends. Feeding a whole trajectory must agree with the
//! exact check in the validator.

use crate::pddl::{Time, TrajectoryConstraint};
use crate::validator::AlwaysWithinReading;

use super::ground::{BitState, Cond, GroundTask};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Always,
    Sometime,
    Within(Time),
    AtMostOnce,
    SometimeAfter,
    SometimeBefore,
    AlwaysWithin(Time),
    HoldDuring(Time, Time),
    HoldAfter(Time),
    AtEnd,
}

const NONE: u64 = u64::MAX;

#[derive(Debug, Clone)]
pub(crate) struct Monitor {
    op: Op,
    phi: Cond,
    psi: Cond,
}

impl Monitor {
    pub(crate) fn compile(
        c: &TrajectoryConstraint,
        task: &GroundTask,
        reading: AlwaysWithinReading,
    ) -> Monitor {
        use TrajectoryConstraint as T;
        let conds = c.conditions();
        let phi = task.compile(conds[0]);
        let psi = conds.get(1).map_or(Cond::Const(false), |c| task.compile(c));
        let op = match c {
            T::Always(_) => Op::Always,
            T::Sometime(_) => Op::Sometime,
            T::Within(d, _) => Op::Within(*d),
            T::AtMostOnce(_) => Op::AtMostOnce,
            T::SometimeAfter(..) => Op::SometimeAfter,
            T::SometimeBefore(..) => Op::SometimeBefore,
            T::AlwaysWithin(d, _) => match reading {
                AlwaysWithinReading::Recurrence => Op::AlwaysWithin(*d),
                AlwaysWithinReading::PlainWithin => Op::Within(*d),
            },
            T::HoldDuring(a, b, _) => Op::HoldDuring(*a, *b),
            T::HoldAfter(d, _) => Op::HoldAfter(*d),
            T::AtEnd(_) => Op::AtEnd,
        };
        Monitor { op, phi, psi }
    }

    /// Whether pruning depends on absolute time, not only on the progress value.
    pub(crate) fn time_dependent(&self) -> bool {
        matches!(
            self.op,
            Op::Within(_) | Op::AlwaysWithin(_) | Op::HoldDuring(..) | Op::HoldAfter(_)
        )
    }

    pub(crate) fn initial(&self) -> u64 {
        match self.op {
            Op::AlwaysWithin(_) => NONE,
            _ => 0,
        }
    }

    /// Advances progress over one snapshot; `None` when the prefix is dead.
    pub(crate) fn observe(&self, progress: u64, s: &BitState, t: Time) -> Option<u64> {
        let phi = || self.phi.eval(s);
        match self.op {
            Op::Always => phi().then_some(0),
            Op::Sometime => Some(if progress == 1 || phi() { 1 } else { 0 }),
            Op::Within(d) => {
                if progress == 1 || (t <= d && phi()) {
                    Some(1)
                } else if t > d {
                    None
                } else {
                    Some(0)
                }
            }
            // 0: not yet true, 1: inside the true interval, 2: interval closed
            Op::AtMostOnce => match (progress, phi()) {
                (0, false) => Some(0),
                (0, true) | (1, true) => Some(1),
                (1, false) | (2, false) => Some(2),
                _ => None,
            },
            // 1 while a trigger still waits for the second condition
            Op::SometimeAfter => {
                if self.psi.eval(s) {
                    Some(0)
                } else if phi() {
                    Some(1)
                } else {
                    Some(progress)
                }
            }
            // 1 once the second condition has been seen
            Op::SometimeBefore => {
                if progress == 0 && phi() {
                    None
                } else if self.psi.eval(s) {
                    Some(1)
                } else {
                    Some(progress)
                }
            }
            // earliest time of a snapshot still waiting for a recurrence
            Op::AlwaysWithin(d) => {
                if phi() {
                    if progress != NONE && t > Time::from_millis(progress).saturating_add(d) {
                        None
                    } else {
                        Some(NONE)
                    }
                } else if progress == NONE {
                    Some(t.millis())
                } else if t > Time::from_millis(progress).saturating_add(d) {
                    None
                } else {
                    Some(progress)
                }
            }
            Op::HoldDuring(a, b) => (!(a <= t && t < b) || phi()).then_some(progress),
            Op::HoldAfter(d) => (t <= d || phi()).then_some(progress),
            Op::AtEnd => Some(progress),
        }
    }

    /// Verdict when the trajectory ends in state `s`.
    pub(crate) fn accepts(&self, progress: u64, s: &BitState) -> bool {
        match self.op {
            Op::Sometime | Op::Within(_) => progress == 1,
            Op::SometimeAfter => progress == 0,
            // a pending snapshot at the end never sees its recurrence
            Op::AlwaysWithin(_) => progress == NONE,
            Op::AtEnd => self.phi.eval(s),
            _ => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::pddl::{Atom, Condition, ConstraintKind, Plan};
    use crate::testutil::naval_mini;
    use crate::validator::{check_constraint_with, simulate};

    fn atoms() -> Vec<Atom> {
        let mut v = Vec::new();
        for x in ["sct_ast_0", "deb_ast_0", "slv_ast_0", "shp_0"] {
            for w in ["wpt_ini", "wpt_b_0", "wpt_end"] {
                v.push(Atom::new("at", [x, w]));
            }
        }
        v.push(Atom::new("blocked", ["wpt_b_0", "wpt_end"]));
        v
    }

    fn cond_strategy() -> impl Strategy<Value = Condition> {
        let n = atoms().len();
        (0..n, any::<bool>()).prop_map(|(i, neg)| {
            let c = Condition::Atom(atoms()[i].clone());
            if neg {
                Condition::not(c)
            } else {
                c
            }
        })
    }

    fn constraint_strategy() -> impl Strategy<Value = TrajectoryConstraint> {
        (
            0..ConstraintKind::ALL.len(),
            cond_strategy(),
            cond_strategy(),
            0u64..5,
            1u64..4,
        )
            .prop_map(|(k, a, b, d, w)| {
                let kind = ConstraintKind::ALL[k];
                let conds = if kind.condition_arity() == 2 {
                    vec![a, b]
                } else {
                    vec![a]
                };
                let durs = match kind.duration_arity() {
                    0 => vec![],
                    1 => vec![Time::from_units(d)],
                    _ => vec![Time::from_units(d), Time::from_units(d + w)],
                };
                TrajectoryConstraint::from_parts(kind, conds, durs).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]
        #[test]
        fn monitor_agrees_with_exact_check(
            choices in prop::collection::vec(0usize..64, 0..7),
            c in constraint_strategy(),
            plain in any::<bool>(),
        ) {
            let reading = if plain { AlwaysWithinReading::PlainWithin } else { AlwaysWithinReading::Recurrence };
            let (d, p) = naval_mini();
            let task = GroundTask::new(&d, &p);
            let mut states = vec![task.init.clone()];
            let mut steps = Vec::new();
            for ch in choices {
                let s = states.last().unwrap();
                let applicable: Vec<_> = task.actions.iter().filter(|a| a.pre.eval(s)).collect();
                if applicable.is_empty() { break; }
                let a = applicable[ch % applicable.len()];
                states.push(a.apply(s));
                steps.push((a.name.clone(), a.args.clone()));
            }
            let traj = simulate(&d, &p, &Plan::sequential(steps)).unwrap();
            let exact = check_constraint_with(&c, &traj, reading);

            let m = Monitor::compile(&c, &task, reading);
            let mut progress = Some(m.initial());
            for (i, s) in states.iter().enumerate() {
                progress = progress.and_then(|p| m.observe(p, s, Time::from_units(i as u64)));
            }
            let monitored = progress.is_some_and(|p| m.accepts(p, states.last().unwrap()));
            prop_assert_eq!(monitored, exact, "{}", c);
        }
    }
}
