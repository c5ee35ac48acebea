//! Cumulant-expansion simulator for a laser driven by the temperature
//! difference between two coupled quantum wells.

pub mod config;
pub mod constants;
pub mod cumulant;
pub mod error;
pub mod model;
pub mod oracle;
pub mod spectrum;
pub mod sweep;
pub mod threshold;

pub use config::Config;
pub use cumulant::{steady_state, CumulantState, SolvePath, SteadyState};
pub use error::{Error, Result};
pub use model::{Model, PhysicalParams, Variant};
pub use sweep::{run_sweep, SweepResult};
