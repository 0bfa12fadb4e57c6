use serde::{Deserialize, Serialize};

/// Instantaneous internal state of one device.
///
/// Voltages are in V, `q_trap_dyn` is the charge accumulated at the
/// ferroelectric/interface boundary from the leakage mismatch
/// ∫(J_fe − J_int)dt, in C/m².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceState {
    /// Fraction of down-polarized domains: 0 = fully up, 1 = fully down.
    pub p: f64,
    pub v_fe: f64,
    pub v_int: f64,
    pub v_depl: f64,
    pub q_trap_dyn: f64,
    pub cycle_count: f64,
}

impl Default for DeviceState {
    fn default() -> Self {
        Self {
            p: 0.5,
            v_fe: 0.0,
            v_int: 0.0,
            v_depl: 0.0,
            q_trap_dyn: 0.0,
            cycle_count: 0.0,
        }
    }
}

impl DeviceState {
    pub fn with_polarization(p: f64) -> Self {
        Self { p, ..Self::default() }
    }

    /// Terminal voltage implied by the layer voltages.
    pub fn v_terminal(&self) -> f64 {
        self.v_fe + self.v_int + self.v_depl
    }
}
