//! Experiment harness: configuration files in, artifacts out.
//!
//! The harness ties the closed-form machinery (signal analysis, spike
//! heights, stability rates) to the finite-volume solver behind one
//! file-driven interface. A run is described by a small INI file
//! ([`config`]), executed by [`run::run_experiment`], and leaves behind
//! plain-text artifacts ([`csvio`]): full-precision CSV snapshots and
//! diagnostics, a prediction-versus-measurement comparison ([`report`]),
//! and a `MANIFEST.txt` recording what was written and whether the run
//! completed. Identical inputs produce byte-identical artifacts, including
//! across different sweep worker counts.

pub mod config;
pub mod csvio;
pub mod report;
pub mod run;

pub use config::{
    parse_config, parse_config_with_mode, serialize_config, ConfigIssue, DomainSection,
    ExperimentConfig, FieldTerm, InitialSection, Mode, OutputSection, PhysicsSection,
    ReactionKind, ScheduleSection, Strategy, SweepAxis, SweepParameter, SweepSection,
    DEFAULT_CELLS_1D, DEFAULT_CELLS_2D,
};
pub use csvio::{diagnostics_csv, fmt_sig, snapshot_csv, snapshot_name};
pub use report::{comparison_report, ComparisonReport, ComparisonRow};
pub use run::{run_experiment, HarnessError, RunOptions, DEFAULT_SEED_GRID};
