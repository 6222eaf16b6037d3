//! Seeded simulation experiments.

pub mod config;
pub mod generate;
pub mod output;
pub mod rng;
pub mod run;
pub mod summary;

pub use config::{ExperimentConfig, OneOrMany, Sweep, SweepField, SweepPoint};
pub use generate::{gen_coefficients, gen_design, gen_group_response, gen_response, permute_coefficients, DesignKind};
pub use output::{write_manifest, write_records_csv, write_summary_csv};
pub use rng::{child_seed, stream_rng, Stream};
pub use run::{replication_coefficients, run_experiment, FitDiagnostics, ReplicationRecord, RunOptions};
pub use summary::{summarize, Stats, SummaryRow};
