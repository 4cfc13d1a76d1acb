//! Repeated, paired simulation runs: single configurations, parameter
//! sweeps, trace replay and named presets, with CSV and JSON output.
//!
//! Every scheduler in a run sees the same job list for a given seed, so
//! ratios between schedulers are paired. PS and SRPT are always simulated
//! alongside the requested schedulers because they are the references of
//! the ratio columns.

mod config;
mod output;
mod presets;
mod runner;

pub use config::{ExperimentConfig, ExperimentError, Repetitions, StopOn};
pub use output::{
    summary_rows, write_bins_csv, write_class_csv, write_ecdf_csv, write_json, write_records_csv,
    write_replay_csv, write_summary_csv, SummaryRow,
};
pub use presets::{preset_plans, run_preset, Preset, PresetOptions, PresetReport};
pub use runner::{
    collect_records, replay, run, run_cell, simulate, sweep, CellResult, ReplayPlan, ReplayRow,
    RunResult, SchedulerSummary, SweepPlan,
};
