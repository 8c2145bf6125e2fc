//! Monte Carlo experiment orchestration: configuration, replication loops
//! and result tables.

pub mod config;
pub mod run;
pub mod spec;
pub mod table;

pub use config::{ExperimentConfig, RunOptions};
pub use run::{
    cells, estimate_lrv, reference_dist, replicate, run_cell, run_experiment, run_experiment_resume, CellKey,
    ExperimentResult, LrvChoice, RepOutcome,
};
pub use spec::{BandwidthRule, CvRule, EstimatorName, EstimatorSpec};
pub use table::{emit_table, parse_csv, read_results, write_table, TableFormat};
