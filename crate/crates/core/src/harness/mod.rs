//! Case-study configuration, orchestration, persistence and reporting.

pub mod config;
pub mod designs;
pub mod format;
pub mod report;
pub mod runner;
pub mod seed;
pub mod store;

pub use config::CaseStudyConfig;
pub use designs::{gen_designs, DesignSet};
pub use report::{analyze, regret_csv, write_regret_csv, Report, Section};
pub use runner::{run_case_study, RunOptions, RunSummary};
pub use store::{RecordKey, RunStore, StoreMeta};
