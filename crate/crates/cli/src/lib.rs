//! Command line front end and session service for the plan critic.

pub mod options;
pub mod service;
