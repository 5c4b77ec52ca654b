//! Experiment harness for `gaussbm`: JSON configuration, suite runs,
//! re-gradable reports and CSV plot tables.
//!
//! ```no_run
//! use gaussbm_harness::{config::ExperimentConfig, plot, suites};
//!
//! let cfg = ExperimentConfig::default();
//! let report = suites::run(&cfg).unwrap();
//! plot::emit_all(&report, std::path::Path::new("out")).unwrap();
//! assert!(report.passed());
//! ```

use std::path::PathBuf;

pub mod config;
pub mod plot;
pub mod report;
pub mod suites;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("config is not valid JSON for the schema: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}", path = .0.display(), source = .1)]
    Io(PathBuf, #[source] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown plot selector `{0}` (expected entropy-curve, gap-vs-t or measure-ci)")]
    UnknownSelector(String),
}
