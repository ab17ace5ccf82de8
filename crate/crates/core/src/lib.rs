//! Coupled electricity-gas network simulation and dynamic trajectory
//! tracking with a square-root cubature Kalman filter, Holt exponential
//! smoothing for the electric block, semi-implicit gas pipeline dynamics
//! and an LSTM gas-load forecaster.

pub mod error;
pub mod gas;
pub mod holt;
pub mod lstm;
pub mod sckf;
pub mod measurement;
pub mod network;
pub mod scenario;
pub mod testnets;

pub use error::{Error, Result};
pub use network::{IesNetwork, StateComponent, StateLayout};
