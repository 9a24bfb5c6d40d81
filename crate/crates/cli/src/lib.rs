//! Experiment harness: configuration, the `decouple`/`train`/`report`
//! commands, and the run report they exchange.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
