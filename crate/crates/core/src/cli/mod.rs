//! Experiment driver behind the `mpd` binary: configs, presets, runs,
//! comparisons, sweeps and the validation suite.

pub mod config;
pub mod presets;
pub mod run;
pub mod validate;

pub use config::{
    DataSpec, ExperimentConfig, ModelSpec, MomentumInit, PreconditionerSpec, SubsampleSpec,
    SweepGrid,
};
pub use presets::{preset, PRESETS};
pub use run::{
    build_model, compare, run_experiment, sweep, write_compare, write_run, BuiltModel,
    CompareOutput, RunOutput, RunSummary, SweepOutput,
};
pub use validate::{run_validation, CheckResult, ValidateOptions, ValidationReport};
