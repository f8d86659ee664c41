//! Acceptance harness for `hphase`: configuration, the named checks and their reports.

pub mod checks;
pub mod config;
pub mod report;

pub use checks::{find, registry, run_check, run_suite, Check, Context};
pub use config::{ConfigError, RunConfig};
pub use report::{emit_report, CheckReport, Format};
