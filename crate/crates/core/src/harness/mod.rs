//! Experiment front end: configuration files, scenario and grid runs,
//! summary tables and plots.

pub mod config;
pub mod grid;
pub mod plot;
pub mod stats;

pub use config::{buffer_from_horizon, GridConfig, ScenarioConfig};
pub use grid::{read_summary_csv, run_grid, write_summary_csv, SummaryRow};
pub use plot::{plot_sawtooth, plot_whiskers, render_plots};
pub use stats::{run_scenario, ScenarioRun, StatsSummary};
