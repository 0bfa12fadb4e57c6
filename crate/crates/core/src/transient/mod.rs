//! Time-domain simulation of the device network.

pub mod engine;
pub mod experiments;
pub mod simulator;
pub mod trace;
pub mod waveform;

pub use engine::{step, Branches, Currents, Device, SolverConfig, StepOutcome};
pub use simulator::{run, Sample, Simulator, StepStats};
pub use trace::TraceSet;
pub use waveform::{Segment, Waveform, WaveformBuilder};
