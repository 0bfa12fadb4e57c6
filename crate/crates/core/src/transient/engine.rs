//! Backward-Euler integration of the layered capacitor network.
//!
//! The unknowns of each step are the ferroelectric voltage `v_fe` and the
//! down fraction `p`. The depletion voltage is a function of both, the
//! interface voltage closes the loop, and the residuals are
//!
//! * the implicit switching update `p − p_old − dt·dp/dt`, and
//! * charge continuity at the internal node: the interface charge equals the
//!   ferroelectric displacement plus the switched polarization plus the
//!   boundary charge accumulated by the leakage mismatch.

use serde::{Deserialize, Serialize};

use crate::constants::A_PER_M2_TO_A_PER_CM2;
use crate::electrostatics::Depletion;
use crate::error::SolverError;
use crate::leakage::{tat_current_density, TatLayerParams};
use crate::params::ModelParams;
use crate::state::DeviceState;
use crate::switching::switching_rate;

/// Physical branches that can be switched off for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branches {
    pub leakage: bool,
    pub switching: bool,
    pub depletion: bool,
}

impl Default for Branches {
    fn default() -> Self {
        Self {
            leakage: true,
            switching: true,
            depletion: true,
        }
    }
}

impl Branches {
    /// Only the linear ferroelectric and interface capacitances remain.
    pub fn linear_only() -> Self {
        Self {
            leakage: false,
            switching: false,
            depletion: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Newton tolerance on the node-charge residual, expressed in volts across the interface.
    pub abs_tol: f64,
    /// Local error target per step for `p` and for the boundary charge (in volts).
    pub rel_tol: f64,
    pub max_newton: usize,
    pub dt_min: f64,
    pub dt_max: f64,
    pub safety: f64,
    /// Largest change of the applied voltage within one step, V.
    pub dv_max: f64,
    /// Largest change of `p` within one step.
    pub dp_max: f64,
    pub branches: Branches,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 2e-4,
            max_newton: 40,
            dt_min: 1e-16,
            dt_max: 1e-3,
            safety: 0.9,
            dv_max: 0.02,
            dp_max: 0.02,
            branches: Branches::default(),
        }
    }
}

impl SolverConfig {
    /// Tolerances scaled by `factor` (smaller is tighter).
    pub fn scaled(mut self, factor: f64) -> Self {
        self.abs_tol *= factor;
        self.rel_tol *= factor;
        self.dv_max *= factor.sqrt();
        self.dp_max *= factor.sqrt();
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = self.abs_tol > 0.0
            && self.rel_tol > 0.0
            && self.dt_min > 0.0
            && self.dt_min < self.dt_max
            && self.max_newton > 0
            && self.safety > 0.0
            && self.safety <= 1.0
            && self.dv_max > 0.0
            && self.dp_max > 0.0;
        if ok {
            Ok(())
        } else {
            Err(SolverError::Waveform(format!("invalid solver configuration {self:?}")))
        }
    }
}

/// Branch currents at the end of a step, A.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Currents {
    /// Terminal current.
    pub total: f64,
    pub leak_fe: f64,
    pub leak_int: f64,
    /// Switching current.
    pub pol: f64,
}

/// Result of one accepted backward-Euler step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: DeviceState,
    pub currents: Currents,
    pub newton_iterations: usize,
    /// Node-charge residual after convergence, C/m².
    pub charge_residual: f64,
    /// Terminal charge moved during the step, C/m².
    pub dq_terminal: f64,
}

/// Parameter-derived constants shared by every step of one simulation.
#[derive(Debug, Clone)]
pub struct Device {
    params: ModelParams,
    branches: Branches,
    /// F/m²
    c_fe: f64,
    c_int: f64,
    p_sw: f64,
    t_fe: f64,
    depl: Depletion,
    tat_fe: TatLayerParams,
    tat_int: TatLayerParams,
}

impl Device {
    pub fn new(params: &ModelParams, branches: Branches) -> Self {
        let c = crate::electrostatics::c_fe_linear(params) * 1e4;
        Self {
            params: params.clone(),
            branches,
            c_fe: c,
            c_int: crate::electrostatics::c_int(params) * 1e4,
            p_sw: params.p_switch_si(),
            t_fe: params.t_fe_si(),
            depl: Depletion::new(params),
            tat_fe: TatLayerParams::ferroelectric(params),
            tat_int: TatLayerParams::interface(params),
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Linear FE capacitance, F/m².
    pub fn c_fe(&self) -> f64 {
        self.c_fe
    }

    /// Interface capacitance, F/m².
    pub fn c_int(&self) -> f64 {
        self.c_int
    }

    pub fn v_depl(&self, v_fe: f64, p: f64) -> f64 {
        if self.branches.depletion {
            self.depl.voltage_at_field(v_fe / self.t_fe, p)
        } else {
            0.0
        }
    }

    /// Leakage current densities (FE, INT), A/m².
    pub fn leakage(&self, v_fe: f64, v_int: f64) -> Result<(f64, f64), SolverError> {
        if !self.branches.leakage {
            return Ok((0.0, 0.0));
        }
        let conv = |r: Result<f64, _>| {
            r.map(|j: f64| j / A_PER_M2_TO_A_PER_CM2)
                .map_err(|e: crate::error::ModelError| SolverError::NonFinite(e.to_string()))
        };
        Ok((
            conv(tat_current_density(v_fe, &self.tat_fe))?,
            conv(tat_current_density(v_int, &self.tat_int))?,
        ))
    }

    pub fn rate(&self, v_fe: f64, p: f64) -> f64 {
        if self.branches.switching {
            switching_rate(v_fe / self.t_fe, p, &self.params)
        } else {
            0.0
        }
    }

    /// Charge on the interface capacitor implied by `(v_fe, p, q_dyn)`, C/m².
    fn node_charge(&self, v_fe: f64, p: f64, q_dyn: f64) -> f64 {
        self.c_fe * v_fe + self.p_sw * (2.0 * p - 1.0) + q_dyn
    }

    /// Static solution with frozen `p` and `q_dyn`: returns `(v_fe, v_depl, v_int)`.
    ///
    /// The node charge balance is monotone in `v_fe`, so a safeguarded
    /// Newton iteration on a bracket always converges.
    pub fn solve_static(&self, v: f64, p: f64, q_dyn: f64) -> (f64, f64, f64) {
        let f = |x: f64| {
            let vi = v - x - self.v_depl(x, p);
            (self.c_int * vi - self.node_charge(x, p, q_dyn)) / self.c_int
        };
        let span = 2.0 * (v.abs() + (self.p_sw + q_dyn.abs()) / self.c_fe + 1.0);
        let (mut lo, mut hi) = (-span, span);
        while f(lo) < 0.0 {
            lo *= 2.0;
        }
        while f(hi) > 0.0 {
            hi *= 2.0;
        }
        let mut x = (v * self.c_int - self.p_sw * (2.0 * p - 1.0) - q_dyn) / (self.c_int + self.c_fe);
        x = x.clamp(lo, hi);
        for _ in 0..200 {
            let fx = f(x);
            if fx == 0.0 {
                break;
            }
            if fx > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let slope = -(1.0 + self.c_fe / self.c_int + self.depl_slope(x, p));
            let mut nx = x - fx / slope;
            if !(nx > lo && nx < hi) {
                nx = 0.5 * (lo + hi);
            }
            if (nx - x).abs() <= 1e-15 * (1.0 + x.abs()) {
                x = nx;
                break;
            }
            x = nx;
        }
        let vd = self.v_depl(x, p);
        (x, vd, v - x - vd)
    }

    /// d v_depl / d v_fe
    fn depl_slope(&self, v_fe: f64, p: f64) -> f64 {
        if self.branches.depletion {
            self.depl.dvoltage_dfield(v_fe / self.t_fe, p) / self.t_fe
        } else {
            0.0
        }
    }

    /// One backward-Euler step to applied voltage `v` over `dt`.
    pub fn step(&self, old: &DeviceState, v: f64, dt: f64, cfg: &SolverConfig) -> Result<StepOutcome, SolverError> {
        let q_old = old.q_trap_dyn;
        let residual = |vfe: f64, p: f64| -> Result<([f64; 2], f64, f64, f64, f64), SolverError> {
            let vd = self.v_depl(vfe, p);
            let vi = v - vfe - vd;
            let (jf, ji) = self.leakage(vfe, vi)?;
            let q_dyn = q_old + dt * (jf - ji);
            let r_p = p - old.p - dt * self.rate(vfe, p);
            let r_q = (self.c_int * vi - self.node_charge(vfe, p, q_dyn)) / self.c_int;
            Ok(([r_q, r_p], vd, vi, jf, ji))
        };

        // start from the frozen-state divider solution
        let (mut vfe, _, _) = self.solve_static(v, old.p, q_old);
        let mut p = old.p;
        let mut iterations = 0;
        let mut r = residual(vfe, p)?.0;
        loop {
            let converged = r[0].abs() < cfg.abs_tol && r[1].abs() < 1e-13;
            if converged {
                break;
            }
            if iterations >= cfg.max_newton {
                return Err(SolverError::NoConvergence {
                    iterations,
                    residual: r[0].abs().max(r[1].abs()),
                });
            }
            iterations += 1;
            let hv = 1e-7 * (1.0 + vfe.abs());
            let hp = if p > 0.5 { -1e-7 } else { 1e-7 };
            let rv = residual(vfe + hv, p)?.0;
            let rp = residual(vfe, p + hp)?.0;
            let j = [
                [(rv[0] - r[0]) / hv, (rp[0] - r[0]) / hp],
                [(rv[1] - r[1]) / hv, (rp[1] - r[1]) / hp],
            ];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if !det.is_finite() || det == 0.0 {
                return Err(SolverError::NoConvergence {
                    iterations,
                    residual: r[0].abs().max(r[1].abs()),
                });
            }
            let dv = (r[0] * j[1][1] - r[1] * j[0][1]) / det;
            let dp = (r[1] * j[0][0] - r[0] * j[1][0]) / det;
            let dv = dv.clamp(-0.5, 0.5);
            let dp = dp.clamp(-0.25, 0.25);
            vfe -= dv;
            p = (p - dp).clamp(0.0, 1.0);
            r = residual(vfe, p)?.0;
            if !(r[0].is_finite() && r[1].is_finite()) {
                return Err(SolverError::NonFinite(format!("residual at v_fe = {vfe}, p = {p}")));
            }
        }
        let (r, vd, vi, jf, ji) = residual(vfe, p)?;
        let q_dyn = q_old + dt * (jf - ji);
        let dq_terminal = self.c_int * (vi - old.v_int) + dt * ji;
        let area = self.params.area_si();
        let state = DeviceState {
            p,
            v_fe: vfe,
            v_int: vi,
            v_depl: vd,
            q_trap_dyn: q_dyn,
            cycle_count: old.cycle_count,
        };
        Ok(StepOutcome {
            state,
            currents: Currents {
                total: dq_terminal / dt * area,
                leak_fe: jf * area,
                leak_int: ji * area,
                pol: 2.0 * self.p_sw * (p - old.p) / dt * area,
            },
            newton_iterations: iterations,
            charge_residual: r[0] * self.c_int,
            dq_terminal,
        })
    }

    /// State consistent with applied voltage `v` at frozen `p` and boundary charge.
    pub fn relaxed_state(&self, v: f64, p: f64, q_dyn: f64) -> DeviceState {
        let (v_fe, v_depl, v_int) = self.solve_static(v, p, q_dyn);
        DeviceState {
            p,
            v_fe,
            v_int,
            v_depl,
            q_trap_dyn: q_dyn,
            cycle_count: 0.0,
        }
    }
}

/// One backward-Euler step from `state`.
pub fn step(
    state: &DeviceState,
    v_applied: f64,
    dt: f64,
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Result<(DeviceState, Currents), SolverError> {
    if !(dt >= cfg.dt_min && dt <= cfg.dt_max) {
        return Err(SolverError::Waveform(format!(
            "dt = {dt:e} s outside [{:e}, {:e}]",
            cfg.dt_min, cfg.dt_max
        )));
    }
    let out = Device::new(params, cfg.branches).step(state, v_applied, dt, cfg)?;
    Ok((out.state, out.currents))
}
