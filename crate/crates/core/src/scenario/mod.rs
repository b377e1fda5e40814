//! Scenario files, end-to-end runs, parameter sweeps and their outputs.

pub mod config;
pub mod output;
pub mod run;
pub mod sweep;

pub use config::{InitialRate, MarginRange, ScenarioConfig, StepSnap};
pub use run::{check_scenario, run_scenario, simulate, RunOutcome};
pub use sweep::{parse_values, sweep, write_sweep, SweepParam, SweepReport, SweepRow};
