//! Experiment harness for the offloading solvers: TOML configs, parameter
//! sweeps, fading Monte Carlo runs and CSV/JSON result tables.

pub mod channel;
pub mod config;
pub mod error;
pub mod montecarlo;
pub mod sweep;
pub mod table;

pub use config::{Config, Param, PowerUnit};
pub use error::{Result, SimError};
pub use montecarlo::{run_montecarlo, Aggregate, MonteCarloReport, MonteCarloSpec};
pub use sweep::{run_sweep, SweepPoint, SweepSpec};
pub use table::Row;
