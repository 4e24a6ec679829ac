//! Scenario runner for the `cgg` binary: configuration, execution and reports.

// Validity tests are negated comparisons so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::Config;
pub use error::CliError;
pub use run::{run_suite, ScenarioOutcome, SuiteOutcome};
