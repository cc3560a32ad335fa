//! Experiment engine: spec files, seeded multi-run studies, statistics and
//! output files.

pub mod audit;
pub mod output;
pub mod run;
pub mod signal_file;
pub mod spec;
pub mod stats;

pub use audit::{gradient_audit, GradientAudit};
pub use output::{read_summary, write_outputs, Summary};
pub use run::{run_experiment, ExperimentOutcome, RunResult, SummaryRecord};
pub use signal_file::{read_signal, write_signal, Provenance, SignalHeader};
pub use spec::{load_experiment, ExperimentSpec, MixtureSpec};
pub use stats::{compute_statistics, ParameterStats};
