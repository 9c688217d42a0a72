//! Replication driver: draw data, build a path on phase one, validate on
//! phase two, score against the exact oracle, aggregate.

mod config;
mod records;
mod run;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{ExperimentConfig, InstanceSource};
pub use records::{
    summarize, summarize_records, summarize_records_from, write_records, BenchmarkOutcome,
    ReplicationRecord, RuleOutcome, RuleSummary, SummaryTable, RECORDS_HEADER,
};
pub use run::{
    chance_problem_bounded, modal_selected_index, run_experiment, run_replication, write_outputs,
    ExperimentOutput, ExperimentSummary,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("records line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("records file has no rows")]
    EmptyInput,
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl HarnessError {
    /// Process exit code for the CLI: 2 for bad configuration or input, 1
    /// otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Parse { .. } | HarnessError::EmptyInput => 2,
            _ => 1,
        }
    }
}
