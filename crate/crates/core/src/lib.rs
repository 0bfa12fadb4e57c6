//! Compact model of a ferroelectric non-volatile capacitor (nvCap).
//!
//! The crate couples trap-assisted tunneling leakage, a polarity-dependent
//! depletion capacitance and hysteretic polarization switching in a layered
//! capacitor network, and builds experiments, Monte Carlo variability,
//! bit-line read-out and parameter calibration on top of it.

// `!(x > 0.0)` is used on purpose so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod constants;
pub mod electrostatics;
pub mod error;
pub mod io;
pub mod leakage;
pub mod montecarlo;
pub mod params;
pub mod readout;
pub mod state;
pub mod switching;
pub mod transient;

pub use error::{Error, ModelError, Result, SolverError};
pub use params::{ModelParams, SwitchingParams};
pub use state::DeviceState;
