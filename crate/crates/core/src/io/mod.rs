//! Scenario files in, result files out.

pub mod config;
pub mod output;
