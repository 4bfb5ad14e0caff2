//! Command-line front end for the quantum linearized-Euler toolkit:
//! experiment configs, runnable subcommands, and deterministic CSV/JSON
//! outputs.
//!
//! The binary (`qlee`) wires these modules to clap; everything here is
//! plain library code so the pieces stay unit-testable.

pub mod commands;
pub mod config;
pub mod oracle;
pub mod report;
pub mod snapshots;
