use crate::pddl::{parse_domain, parse_problem, DomainModel, ProblemModel};

pub(crate) const NAVAL_DOMAIN: &str = include_str!("../packs/naval/domain.pddl");
pub(crate) const MINI_PROBLEM: &str = include_str!("../packs/naval/problems/mini.pddl");

pub(crate) fn naval_mini() -> (DomainModel, ProblemModel) {
    let d = parse_domain(NAVAL_DOMAIN).expect("naval domain parses");
    let p = parse_problem(MINI_PROBLEM, &d).expect("mini problem parses");
    (d, p)
}
