//! Experiment orchestration: configuration, the end-to-end pipeline, sweeps,
//! result files and the built-in property checks.

pub mod config;
pub mod output;
pub mod pipeline;
pub mod selftest;
pub mod sweep;

pub use config::{CprSettings, Profile, RunConfig, StepSettings};
pub use output::{gain_curves, gain_svg, read_csv, write_csv, GainStat, ResultRow, CSV_COLUMNS};
pub use pipeline::{
    evaluate, frame_ngmi, front_end, pn_delay_symbols, receive, simulate_group, transmit, CellOutcome,
    RxChannel, SchemeOutcome, Transmitted,
};
pub use selftest::{run_selftest, CheckResult};
pub use sweep::{
    run_groups, run_single, run_sweep, single_groups, sweep_groups, window_report, write_outputs,
    Group, SweepOutput,
};
