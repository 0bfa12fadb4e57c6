//! Adaptive time stepping over piecewise-linear drives.

use crate::error::SolverError;
use crate::params::ModelParams;
use crate::state::DeviceState;
use crate::transient::engine::{Currents, Device, SolverConfig, StepOutcome};
use crate::transient::trace::TraceSet;
use crate::transient::waveform::Waveform;

/// View of one accepted step handed to observers.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub t: f64,
    pub v_applied: f64,
    pub state: &'a DeviceState,
    pub currents: &'a Currents,
    /// Terminal charge since the simulator was created, C/m².
    pub q_terminal: f64,
    pub segment: &'a str,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub newton_iterations: usize,
}

/// Stateful integrator owning one device instance.
#[derive(Debug, Clone)]
pub struct Simulator {
    device: Device,
    cfg: SolverConfig,
    pub state: DeviceState,
    pub t: f64,
    pub v: f64,
    pub q_terminal: f64,
    pub stats: StepStats,
    dt: f64,
    // (dt, Δp, Δq in volts) of the last accepted step, for the error estimate
    history: Option<(f64, f64, f64)>,
}

impl Simulator {
    /// Starts from `initial`, relaxed onto the network at its own terminal voltage.
    pub fn new(params: &ModelParams, cfg: SolverConfig, initial: DeviceState) -> Result<Self, SolverError> {
        cfg.validate()?;
        let device = Device::new(params, cfg.branches);
        let v = initial.v_terminal();
        let mut state = device.relaxed_state(v, initial.p, initial.q_trap_dyn);
        state.cycle_count = initial.cycle_count;
        Ok(Self {
            device,
            cfg,
            state,
            t: 0.0,
            v,
            q_terminal: 0.0,
            stats: StepStats::default(),
            dt: cfg.dt_max.min(1e-9),
            history: None,
        })
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Forces the polarization state, keeping the applied voltage.
    pub fn set_polarization(&mut self, p: f64) {
        let cycles = self.state.cycle_count;
        self.state = self.device.relaxed_state(self.v, p, self.state.q_trap_dyn);
        self.state.cycle_count = cycles;
        self.history = None;
    }

    /// One uncontrolled step of size `dt` to applied voltage `v`.
    pub fn step_fixed(&mut self, v: f64, dt: f64) -> Result<StepOutcome, SolverError> {
        let out = self.device.step(&self.state, v, dt, &self.cfg)?;
        self.commit(&out, v, dt);
        Ok(out)
    }

    fn commit(&mut self, out: &StepOutcome, v: f64, dt: f64) {
        let dqv = (out.state.q_trap_dyn - self.state.q_trap_dyn) / self.device.c_int();
        self.history = Some((dt, out.state.p - self.state.p, dqv));
        self.state = out.state;
        self.t += dt;
        self.v = v;
        self.q_terminal += out.dq_terminal;
        self.stats.accepted += 1;
        self.stats.newton_iterations += out.newton_iterations;
    }

    fn too_small(&self, dt: f64, label: &str) -> SolverError {
        SolverError::StepTooSmall {
            t: self.t,
            dt,
            segment: label.to_string(),
            state: format!("{:?}, v_applied = {} V", self.state, self.v),
        }
    }

    /// Linear ramp from the present applied voltage to `v_end`.
    pub fn ramp(
        &mut self,
        v_end: f64,
        duration: f64,
        label: &str,
        obs: &mut dyn FnMut(&Sample),
    ) -> Result<(), SolverError> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(SolverError::Waveform(format!(
                "segment `{label}` has duration {duration}"
            )));
        }
        let v0 = self.v;
        let slope = (v_end - v0) / duration;
        let cfg = self.cfg;
        let mut tau = 0.0;
        while tau < duration {
            let remaining = duration - tau;
            let mut cap = cfg.dt_max;
            if slope != 0.0 {
                cap = cap.min(cfg.dv_max / slope.abs());
            }
            let mut dt = self.dt.min(cap);
            let mut truncated = dt < self.dt;
            if dt >= remaining * 0.99 {
                truncated = truncated || dt > remaining;
                dt = remaining;
            }
            loop {
                let last = dt >= remaining;
                let v_next = if last { v_end } else { v0 + slope * (tau + dt) };
                let out = match self.device.step(&self.state, v_next, dt, &cfg) {
                    Ok(o) => o,
                    Err(SolverError::NoConvergence { .. }) | Err(SolverError::NonFinite(_)) => {
                        self.stats.rejected += 1;
                        dt *= 0.25;
                        truncated = false;
                        if dt < cfg.dt_min {
                            return Err(self.too_small(dt, label));
                        }
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let dp = out.state.p - self.state.p;
                let dqv = (out.state.q_trap_dyn - self.state.q_trap_dyn) / self.device.c_int();
                let err = match self.history {
                    Some((dtl, dpl, dql)) => {
                        let r = dt / dtl;
                        0.5 * (dp - dpl * r).abs().max((dqv - dql * r).abs())
                    }
                    None => 0.5 * dp.abs().max(dqv.abs()),
                };
                let at_floor = dt <= cfg.dt_min * 1.0001;
                if (err > cfg.rel_tol || dp.abs() > cfg.dp_max) && !at_floor {
                    self.stats.rejected += 1;
                    let mut f = if err > 0.0 {
                        (cfg.safety * (cfg.rel_tol / err).sqrt()).clamp(0.1, 0.5)
                    } else {
                        0.5
                    };
                    if dp.abs() > cfg.dp_max {
                        f = f.min(0.9 * cfg.dp_max / dp.abs());
                    }
                    dt = (dt * f).max(cfg.dt_min);
                    truncated = false;
                    continue;
                }
                let mut grow = if err > 0.0 {
                    (cfg.safety * (cfg.rel_tol / err).sqrt()).clamp(0.2, 2.0)
                } else {
                    2.0
                };
                if dp != 0.0 {
                    grow = grow.min(cfg.dp_max / dp.abs());
                }
                let proposal = (dt * grow).clamp(cfg.dt_min, cfg.dt_max);
                self.dt = if truncated { self.dt.max(proposal) } else { proposal };
                self.commit(&out, v_next, dt);
                tau = if last { duration } else { tau + dt };
                obs(&Sample {
                    t: self.t,
                    v_applied: v_next,
                    state: &out.state,
                    currents: &out.currents,
                    q_terminal: self.q_terminal,
                    segment: label,
                });
                break;
            }
        }
        Ok(())
    }

    pub fn hold(&mut self, duration: f64, label: &str, obs: &mut dyn FnMut(&Sample)) -> Result<(), SolverError> {
        let v = self.v;
        self.ramp(v, duration, label, obs)
    }

    /// Integrates every segment of `wf`; the first segment must start at the present voltage.
    pub fn run_waveform(&mut self, wf: &Waveform, obs: &mut dyn FnMut(&Sample)) -> Result<(), SolverError> {
        wf.validate()?;
        if (wf.initial_voltage() - self.v).abs() > 1e-12 {
            return Err(SolverError::Waveform(format!(
                "waveform starts at {} V but the device sits at {} V",
                wf.initial_voltage(),
                self.v
            )));
        }
        for seg in &wf.segments {
            self.ramp(seg.v_end, seg.duration, &seg.label, obs)?;
        }
        Ok(())
    }

    /// Runs `wf` and records every accepted step, including the initial row.
    pub fn record(&mut self, wf: &Waveform) -> Result<TraceSet, SolverError> {
        let p_sw_uc = self.device.params().p_switch_si() * 100.0;
        let mut trace = TraceSet::default();
        let s0 = self.state;
        trace.push(
            self.t,
            self.v,
            &s0,
            &Currents::default(),
            p_sw_uc,
            self.q_terminal,
            "initial",
        );
        self.run_waveform(wf, &mut |s| {
            trace.push(s.t, s.v_applied, s.state, s.currents, p_sw_uc, s.q_terminal, s.segment)
        })?;
        Ok(trace)
    }
}

/// Integrates `waveform` from `initial` and returns the full trace.
pub fn run(
    waveform: &Waveform,
    initial: &DeviceState,
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Result<TraceSet, SolverError> {
    let mut sim = Simulator::new(params, *cfg, *initial)?;
    if (waveform.initial_voltage() - sim.v).abs() > 1e-12 {
        return Err(SolverError::Waveform(format!(
            "waveform starts at {} V but the initial state sits at {} V",
            waveform.initial_voltage(),
            sim.v
        )));
    }
    sim.record(waveform)
}
