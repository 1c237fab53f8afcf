//! Verification suites, acceptance criteria and the experiment runner
//! behind the `cgm` binary.

pub mod checks;
pub mod config;
pub mod criteria;
pub mod output;
pub mod policy;
pub mod suites;
