//! Column-oriented simulation traces.

use serde::{Deserialize, Serialize};

use crate::state::DeviceState;
use crate::transient::engine::Currents;

/// Sampled transient, one entry per accepted step.
///
/// Voltages in V, currents in A, `q_trap_dyn` in C/m², `polarization` in
/// µC/cm² (switched polarization `α·P_s·(2p − 1)`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceSet {
    pub t: Vec<f64>,
    pub v_applied: Vec<f64>,
    pub v_fe: Vec<f64>,
    pub v_int: Vec<f64>,
    pub v_depl: Vec<f64>,
    pub p: Vec<f64>,
    pub i_total: Vec<f64>,
    pub i_leak_fe: Vec<f64>,
    pub i_leak_int: Vec<f64>,
    pub i_pol: Vec<f64>,
    pub q_trap_dyn: Vec<f64>,
    pub polarization: Vec<f64>,
    /// Terminal charge since the start of the run, C/m².
    pub q_terminal: Vec<f64>,
    pub segment: Vec<String>,
}

/// Column names and units in emission order.
pub const TRACE_COLUMNS: [(&str, &str); 13] = [
    ("t", "s"),
    ("v_applied", "V"),
    ("v_fe", "V"),
    ("v_int", "V"),
    ("v_depl", "V"),
    ("p", "1"),
    ("i_total", "A"),
    ("i_leak_fe", "A"),
    ("i_leak_int", "A"),
    ("i_pol", "A"),
    ("q_trap_dyn", "C/m2"),
    ("polarization", "uC/cm2"),
    ("q_terminal", "C/m2"),
];

impl TraceSet {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        t: f64,
        v_applied: f64,
        s: &DeviceState,
        c: &Currents,
        p_switch_uc: f64,
        q_terminal: f64,
        segment: &str,
    ) {
        self.t.push(t);
        self.v_applied.push(v_applied);
        self.v_fe.push(s.v_fe);
        self.v_int.push(s.v_int);
        self.v_depl.push(s.v_depl);
        self.p.push(s.p);
        self.i_total.push(c.total);
        self.i_leak_fe.push(c.leak_fe);
        self.i_leak_int.push(c.leak_int);
        self.i_pol.push(c.pol);
        self.q_trap_dyn.push(s.q_trap_dyn);
        self.polarization.push(p_switch_uc * (2.0 * s.p - 1.0));
        self.q_terminal.push(q_terminal);
        self.segment.push(segment.to_string());
    }

    /// Numeric columns in [`TRACE_COLUMNS`] order.
    pub fn columns(&self) -> [&Vec<f64>; 13] {
        [
            &self.t,
            &self.v_applied,
            &self.v_fe,
            &self.v_int,
            &self.v_depl,
            &self.p,
            &self.i_total,
            &self.i_leak_fe,
            &self.i_leak_int,
            &self.i_pol,
            &self.q_trap_dyn,
            &self.polarization,
            &self.q_terminal,
        ]
    }

    pub fn columns_mut(&mut self) -> [&mut Vec<f64>; 13] {
        [
            &mut self.t,
            &mut self.v_applied,
            &mut self.v_fe,
            &mut self.v_int,
            &mut self.v_depl,
            &mut self.p,
            &mut self.i_total,
            &mut self.i_leak_fe,
            &mut self.i_leak_int,
            &mut self.i_pol,
            &mut self.q_trap_dyn,
            &mut self.polarization,
            &mut self.q_terminal,
        ]
    }

    /// Largest KVL mismatch over all rows, V.
    pub fn max_kvl_error(&self) -> f64 {
        (0..self.len())
            .map(|i| (self.v_fe[i] + self.v_int[i] + self.v_depl[i] - self.v_applied[i]).abs())
            .fold(0.0, f64::max)
    }
}
