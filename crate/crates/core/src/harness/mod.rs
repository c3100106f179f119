//! Seeded experiment runner: configuration, parallel trial execution,
//! summary statistics and versioned CSV output.

mod config;
mod run;
mod stats;

pub use config::{parse_list, ExperimentConfig, FamilyTemplate};
pub use run::{run_experiment, trial_seed, CsvSink, ResultRow, SCHEMA_LINE};
pub use stats::{
    hypergeometric_tail, overlap_check, quantile, summarize, wilson_interval, z_score, OverlapReport,
    QuerySummary, TailRow,
};
