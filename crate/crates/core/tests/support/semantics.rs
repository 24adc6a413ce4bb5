//! Direct quantifier-form reading of the ten trajectory operators over
//! per-snapshot truth values, kept independent of the validator's
//! single-pass implementation.

use plancritic_core::pddl::{Time, TrajectoryConstraint};

pub fn holds(c: &TrajectoryConstraint, t: &[u64], phi: &[bool], psi: &[bool]) -> bool {
    use TrajectoryConstraint as T;
    let n = phi.len();
    let u = |d: &Time| d.millis();
    let t: Vec<u64> = t.iter().map(|x| x * 1000).collect();
    match c {
        T::Always(_) => (0..n).all(|i| phi[i]),
        T::Sometime(_) => (0..n).any(|i| phi[i]),
        T::Within(d, _) => (0..n).any(|i| phi[i] && t[i] <= u(d)),
        // no true, false, true pattern anywhere
        T::AtMostOnce(_) => {
            !(0..n).any(|i| (i + 1..n).any(|j| (j + 1..n).any(|k| phi[i] && !phi[j] && phi[k])))
        }
        T::SometimeAfter(..) => (0..n).all(|i| !phi[i] || (i..n).any(|j| psi[j])),
        T::SometimeBefore(..) => (0..n).all(|i| !phi[i] || (0..i).any(|j| psi[j])),
        T::AlwaysWithin(d, _) => (0..n).all(|i| (i..n).any(|j| phi[j] && t[j] <= t[i] + u(d))),
        T::HoldDuring(a, b, _) => (0..n).all(|i| !(u(a) <= t[i] && t[i] < u(b)) || phi[i]),
        T::HoldAfter(d, _) => (0..n).all(|i| t[i] <= u(d) || phi[i]),
        T::AtEnd(_) => n > 0 && phi[n - 1],
    }
}
