//! Experiment runner and file formats behind the `acscp` command.

pub mod config;
pub mod experiment;
pub mod io;
pub mod snapshot;

pub use config::{load_spec, parse_spec, ExperimentSpec, Scheme};
pub use experiment::{run_experiment, write_outputs, ExperimentResult};
pub use io::{read_log, verify_log, write_log, Verification};
pub use snapshot::{export_field_snapshots, parse_times, snapshot_at, Snapshot, SnapshotTime};
