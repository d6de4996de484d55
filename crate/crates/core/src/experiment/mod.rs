//! Config parsing, the experiment driver, manifests, and trace files.

pub mod config;
pub mod manifest;
pub mod runner;
pub mod trace;

pub use config::{parse_config, DatasetSource, ExperimentConfig, SyntheticSpec};
pub use manifest::{parse_repetition_records, AbortedCell, DatasetFingerprint, RepetitionRecord, RunManifest};
pub use runner::{
    run_experiment, run_prepared, synthesize_projects, trace_file_name, ExperimentContext, ExperimentOutput,
    RepetitionRun,
};
pub use trace::{emit_trace, parse_trace, write_trace, ParsedTrace};
