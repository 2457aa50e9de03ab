//! Batch experiments: scenes → problems → reductions → solvers → CSV rows,
//! plus a manifest that can replay any run.

mod config;
mod manifest;
mod rows;
mod run;

pub use config::{ExperimentConfig, ExperimentKind, Method, SweepConfig, DEFAULT_LINE_CAP, EXTENDED_LINE_CAP};
pub use manifest::{
    sha256_hex, verify_manifest, write_run, Manifest, RunFiles, Verification, MANIFEST_FILE, RESULTS_FILE,
};
pub use rows::{csv_bytes, read_csv, write_csv, ResultRow, CSV_HEADER};
pub use run::{
    mrt_power, random_scene_config, run_distance_sweep, run_experiment, run_quadratization_comparison,
    run_scaling_sweep, Design, Designer, Instance, RunOptions, RunOutput,
};
