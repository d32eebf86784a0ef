//! Scenario files, parameter sweeps, framework comparison and Monte-Carlo
//! validation on top of `bfv-core`.

pub mod compare;
pub mod scenario;
pub mod sweep;

pub use compare::{compare, Comparison};
pub use scenario::{load_scenario, parse_scenario, Scenario, ScenarioError};
pub use sweep::{run_sweep, write_csv, SweepField, SweepRow, SweepSpec};
