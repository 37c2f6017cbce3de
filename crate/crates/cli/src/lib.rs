//! Command-line front end for the veritas simulator.

pub mod app;
pub mod config;
pub mod report;
