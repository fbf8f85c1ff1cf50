//! Scenario files, sweeps, calibration and the `qkdcoex` command line on
//! top of `qkdcoex-core`.

pub mod config;
pub mod error;
pub mod io;
pub mod quantity;
pub mod run;

pub use config::ScenarioConfig;
pub use error::{ConfigError, Result};
