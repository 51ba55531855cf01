//! Configuration, scenarios, output writers and command implementations for
//! the `arrestflow` command-line tool.

pub mod commands;
pub mod config;
pub mod output;
pub mod scenario;

pub use commands::{convergence, diagnose, simulate, validate_kernel, SimulationSummary};
pub use config::{load_config, parse_config, ConfigError, SystemConfig};
