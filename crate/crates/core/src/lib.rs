pub mod corpus;
pub mod engine;
pub mod ga;
pub mod oracle;
mod par;
pub mod pddl;
pub mod planner;
#[cfg(test)]
mod testutil;
pub mod translator;
pub mod validator;

pub use par::Workers;
