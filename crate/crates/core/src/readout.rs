//! Behavioral bit-line read-out.
//!
//! The bit line (BL) and the drive line are precharged to the common-mode
//! voltage. A read pulse is applied to the nvCap's drive terminal while the
//! reference capacitor receives the inverted pulse; both inject charge into
//! the floating BL. All BL voltages here are relative to the common mode,
//! and the nvCap sees `v_pulse − v_bl`, so the read is a full nonlinear
//! co-simulation including leakage.

use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::params::ModelParams;
use crate::state::DeviceState;
use crate::transient::engine::{Device, SolverConfig};

const FF: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadCircuitConfig {
    /// Bit-line capacitance, fF.
    pub c_bl: f64,
    /// Reference capacitance, fF; `None` selects the geometric mean of the
    /// nominal HCS and LCS effective capacitances.
    pub c_ref: Option<f64>,
    /// V
    pub v_read: f64,
    /// Pulse width (sampling instant), s.
    pub t_read: f64,
    /// Pulse rise time, s.
    pub t_rise: f64,
    /// Common-mode precharge, V. Only shifts the reported absolute levels.
    pub v_cm: f64,
    /// Standard deviation of the comparator input offset, mV.
    pub sa_offset_sigma: f64,
    /// Comparator threshold relative to the common mode, V.
    pub sa_threshold: f64,
    /// Time steps of the read transient.
    pub steps: usize,
}

impl Default for ReadCircuitConfig {
    fn default() -> Self {
        Self {
            c_bl: 10.0,
            c_ref: None,
            v_read: 0.3,
            t_read: 40e-9,
            t_rise: 1e-9,
            v_cm: 0.45,
            sa_offset_sigma: 0.0,
            sa_threshold: 0.0,
            steps: 200,
        }
    }
}

impl ReadCircuitConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = self.c_bl > 0.0
            && self.t_read > 0.0
            && self.t_rise > 0.0
            && self.t_rise <= self.t_read
            && self.steps >= 2
            && self.c_ref.is_none_or(|c| c >= 0.0)
            && self.sa_offset_sigma >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(SolverError::Waveform(format!("invalid read circuit {self:?}")))
        }
    }

    fn pulse(&self, t: f64) -> f64 {
        self.v_read * (t / self.t_rise).min(1.0)
    }
}

/// Outcome of reading one stored state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadResult {
    /// BL voltage at the sampling instant relative to the common mode, mV.
    pub v_bl: f64,
    /// Comparator decision (true reads as the high-capacitance state).
    pub bit: bool,
    /// Signed distance from the comparator threshold including its offset, mV.
    pub margin: f64,
}

/// Transient of the BL node during one read; capacitances in F.
fn bl_transient(
    dev: &Device,
    state: &DeviceState,
    circuit: &ReadCircuitConfig,
    c_ref: f64,
    cfg: &SolverConfig,
) -> Result<f64, SolverError> {
    let area = dev.params().area_si();
    let c_bl = circuit.c_bl * FF;
    let dt = circuit.t_read / circuit.steps as f64;
    let mut s = dev.relaxed_state(0.0, state.p, state.q_trap_dyn);
    let mut q_dev = 0.0;
    let mut u = 0.0;
    for k in 1..=circuit.steps {
        let vp = circuit.pulse(k as f64 * dt);
        // BL charge balance: (c_bl + c_ref)·u = Q_dev(vp − u) − c_ref·vp
        let g = |u: f64| -> Result<(f64, crate::transient::StepOutcome), SolverError> {
            let out = dev.step(&s, vp - u, dt, cfg)?;
            let q = (q_dev + out.dq_terminal) * area;
            Ok(((c_bl + c_ref) * u - q + c_ref * vp, out))
        };
        let (mut u0, mut u1) = (u, u + 1e-4);
        let (mut g0, _) = g(u0)?;
        let (mut g1, mut out) = g(u1)?;
        for _ in 0..50 {
            if g1.abs() <= 1e-22 || (u1 - u0).abs() < 1e-13 {
                break;
            }
            let slope = (g1 - g0) / (u1 - u0);
            if slope == 0.0 || !slope.is_finite() {
                break;
            }
            let u2 = u1 - g1 / slope;
            let (g2, o2) = g(u2)?;
            (u0, g0, u1, g1, out) = (u1, g1, u2, g2, o2);
        }
        u = u1;
        q_dev += out.dq_terminal;
        s = out.state;
    }
    Ok(u)
}

/// Effective read capacitance of a stored state (fF): charge delivered by the
/// read pulse with the BL held at the common mode, divided by the pulse.
pub fn effective_capacitance(
    state: &DeviceState,
    params: &ModelParams,
    circuit: &ReadCircuitConfig,
    cfg: &SolverConfig,
) -> Result<f64, SolverError> {
    let dev = Device::new(params, cfg.branches);
    let dt = circuit.t_read / circuit.steps as f64;
    let mut s = dev.relaxed_state(0.0, state.p, state.q_trap_dyn);
    let mut q = 0.0;
    for k in 1..=circuit.steps {
        let out = dev.step(&s, circuit.pulse(k as f64 * dt), dt, cfg)?;
        q += out.dq_terminal;
        s = out.state;
    }
    Ok(q * params.area_si() / circuit.v_read / FF)
}

/// Reads one stored state through the BL with comparator offset `offset_mv`.
pub fn read_once(
    state: &DeviceState,
    params: &ModelParams,
    circuit: &ReadCircuitConfig,
    c_ref_ff: f64,
    offset_mv: f64,
    cfg: &SolverConfig,
) -> Result<ReadResult, SolverError> {
    circuit.validate()?;
    let dev = Device::new(params, cfg.branches);
    let u = bl_transient(&dev, state, circuit, c_ref_ff * FF, cfg)? * 1e3;
    let margin = u - circuit.sa_threshold * 1e3 - offset_mv;
    Ok(ReadResult {
        v_bl: u,
        bit: margin > 0.0,
        margin,
    })
}

/// Write pulses used to prepare the two stored states before a read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WriteScheme {
    pub erase: crate::transient::experiments::WritePulse,
    pub program: crate::transient::experiments::WritePulse,
}

impl Default for WriteScheme {
    fn default() -> Self {
        Self {
            erase: crate::transient::experiments::WritePulse::erase(),
            program: crate::transient::experiments::WritePulse::program(),
        }
    }
}

/// Device states after the erase (down) and program (up) writes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoredStates {
    pub down: DeviceState,
    pub up: DeviceState,
}

pub fn written_states(
    params: &ModelParams,
    writes: &WriteScheme,
    cfg: &SolverConfig,
) -> Result<StoredStates, SolverError> {
    let write = |w: &crate::transient::experiments::WritePulse| -> Result<DeviceState, SolverError> {
        let mut sim = crate::transient::experiments::fresh(params, cfg)?;
        w.apply(&mut sim)?;
        Ok(sim.state)
    };
    Ok(StoredStates {
        down: write(&writes.erase)?,
        up: write(&writes.program)?,
    })
}

/// Effective capacitances (fF) of the two stored states as `(down, up)`.
pub fn effective_pair(
    states: &StoredStates,
    params: &ModelParams,
    circuit: &ReadCircuitConfig,
    cfg: &SolverConfig,
) -> Result<(f64, f64), SolverError> {
    Ok((
        effective_capacitance(&states.down, params, circuit, cfg)?,
        effective_capacitance(&states.up, params, circuit, cfg)?,
    ))
}

/// Geometric mean of the two effective capacitances, fF.
pub fn default_reference(
    states: &StoredStates,
    params: &ModelParams,
    circuit: &ReadCircuitConfig,
    cfg: &SolverConfig,
) -> Result<f64, SolverError> {
    let (d, u) = effective_pair(states, params, circuit, cfg)?;
    Ok((d * u).sqrt())
}

/// Read of both stored states with a shared comparator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRead {
    pub hcs: ReadResult,
    pub lcs: ReadResult,
    /// True when the down state is the high-capacitance one.
    pub down_is_hcs: bool,
    /// fF
    pub c_ref: f64,
    /// BL separation `v_bl(HCS) − v_bl(LCS)`, mV.
    pub separation: f64,
    /// Sense margin: the smaller correctly signed distance of the two
    /// states from the comparator threshold, mV (negative on a misread).
    pub margin: f64,
    pub pass: bool,
}

/// Reads both states. The HCS is whichever state has the larger effective
/// capacitance; `c_ref_ff = None` selects the geometric-mean reference.
pub fn read_pair(
    states: &StoredStates,
    params: &ModelParams,
    circuit: &ReadCircuitConfig,
    offset_mv: f64,
    cfg: &SolverConfig,
) -> Result<PairRead, SolverError> {
    let (cd, cu) = effective_pair(states, params, circuit, cfg)?;
    let c_ref = circuit.c_ref.unwrap_or((cd * cu).sqrt());
    let down_is_hcs = cd >= cu;
    let (h, l) = if down_is_hcs {
        (&states.down, &states.up)
    } else {
        (&states.up, &states.down)
    };
    let hcs = read_once(h, params, circuit, c_ref, offset_mv, cfg)?;
    let lcs = read_once(l, params, circuit, c_ref, offset_mv, cfg)?;
    let margin = hcs.margin.min(-lcs.margin);
    Ok(PairRead {
        hcs,
        lcs,
        down_is_hcs,
        c_ref,
        separation: hcs.v_bl - lcs.v_bl,
        margin,
        pass: hcs.bit && !lcs.bit,
    })
}

/// Which defect population a degradation sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DefectAxis {
    /// Bulk traps in the ferroelectric only (cm⁻³).
    FeBulk,
    /// Bulk traps in the ferroelectric and the interface layer, set to the
    /// same density (cm⁻³).
    FeAndInterface,
    /// Up-state interface trap charge (cm⁻²) with the down-state density held
    /// at [`INTERFACE_DOWN_FIXED`].
    InterfaceUp,
}

/// Down-state interface trap charge used by the [`DefectAxis::InterfaceUp`] sweep, cm⁻².
pub const INTERFACE_DOWN_FIXED: f64 = 5e11;

impl DefectAxis {
    pub fn apply(self, base: &ModelParams, density: f64) -> ModelParams {
        let mut p = base.clone();
        match self {
            DefectAxis::FeBulk => p.n_tr_fe = density,
            DefectAxis::FeAndInterface => {
                p.n_tr_fe = density;
                p.n_tr_int = density;
            }
            DefectAxis::InterfaceUp => {
                p.n_tr_depl_down = INTERFACE_DOWN_FIXED;
                p.n_tr_depl_up = density;
            }
        }
        p
    }

    /// The bulk axes degrade an existing window, so the comparator reference
    /// stays at its nominal value and the signal is tracked from the down
    /// (erased) state. The interface axis grows the up state's capacitance,
    /// so the signal is tracked from the up state and the reference is
    /// re-centred at each point.
    fn tracks_up(self) -> bool {
        matches!(self, DefectAxis::InterfaceUp)
    }

    /// Unit of the swept density.
    pub fn density_unit(self) -> &'static str {
        match self {
            DefectAxis::InterfaceUp => "cm-2",
            _ => "cm-3",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DefectAxis::FeBulk => "fe",
            DefectAxis::FeAndInterface => "fe+int",
            DefectAxis::InterfaceUp => "int-up",
        }
    }
}

impl std::str::FromStr for DefectAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fe" => Ok(DefectAxis::FeBulk),
            "fe+int" | "fe-int" => Ok(DefectAxis::FeAndInterface),
            "int-up" => Ok(DefectAxis::InterfaceUp),
            other => Err(format!("unknown defect axis `{other}` (expected fe, fe+int or int-up)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationPoint {
    pub density: f64,
    /// BL voltage of the tracked state, mV.
    pub v_tracked: f64,
    /// BL voltage of the opposite state, mV.
    pub v_other: f64,
    /// BL signal `v_tracked − v_other`, mV.
    pub separation: f64,
    /// Smaller correctly signed distance of the two states from the
    /// threshold, mV, taking the tracked state as the one that should read high.
    pub margin: f64,
    /// Small-signal window at 0 V, tracked minus opposite state, fF/µm².
    pub delta_c: f64,
    pub c_ref: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationSweep {
    pub axis: DefectAxis,
    pub points: Vec<DegradationPoint>,
}

impl DegradationSweep {
    /// Largest departure of the BL signal from its value at the first point, mV.
    pub fn signal_change(&self) -> f64 {
        let Some(first) = self.points.first() else {
            return 0.0;
        };
        self.points
            .iter()
            .map(|q| (q.separation - first.separation).abs())
            .fold(0.0, f64::max)
    }

    /// True when `f` never increases along the sweep (within `tol`).
    pub fn non_increasing(&self, f: impl Fn(&DegradationPoint) -> f64, tol: f64) -> bool {
        self.points.windows(2).all(|w| f(&w[1]) <= f(&w[0]) + tol)
    }

    /// True when `f` strictly increases along the sweep.
    pub fn increasing(&self, f: impl Fn(&DegradationPoint) -> f64) -> bool {
        self.points.windows(2).all(|w| f(&w[1]) > f(&w[0]))
    }
}

/// Repeats the write and read sequence along a defect axis.
pub fn degradation_sweep(
    params: &ModelParams,
    circuit: &ReadCircuitConfig,
    axis: DefectAxis,
    densities: &[f64],
    writes: &WriteScheme,
    cfg: &SolverConfig,
) -> Result<DegradationSweep, SolverError> {
    use rayon::prelude::*;
    circuit.validate()?;
    let nominal_ref = match (circuit.c_ref, axis.tracks_up()) {
        (Some(c), _) => Some(c),
        (None, true) => None,
        (None, false) => Some(default_reference(
            &written_states(params, writes, cfg)?,
            params,
            circuit,
            cfg,
        )?),
    };
    let window = crate::transient::experiments::WindowConfig {
        erase: writes.erase,
        program: writes.program,
        biases: vec![0.0],
        ..Default::default()
    };
    let points = densities
        .par_iter()
        .map(|&density| {
            let p = axis.apply(params, density);
            let states = written_states(&p, writes, cfg)?;
            let (tracked, other) = if axis.tracks_up() {
                (&states.up, &states.down)
            } else {
                (&states.down, &states.up)
            };
            let c_ref = match nominal_ref {
                Some(c) => c,
                None => default_reference(&states, &p, circuit, cfg)?,
            };
            let a = read_once(tracked, &p, circuit, c_ref, 0.0, cfg)?;
            let b = read_once(other, &p, circuit, c_ref, 0.0, cfg)?;
            let mw = crate::transient::experiments::memory_window(&p, &window, cfg)?;
            let dc = mw.c_hcs[0] - mw.c_lcs[0];
            Ok(DegradationPoint {
                density,
                v_tracked: a.v_bl,
                v_other: b.v_bl,
                separation: a.v_bl - b.v_bl,
                margin: a.margin.min(-b.margin),
                delta_c: if axis.tracks_up() { -dc } else { dc },
                c_ref,
            })
        })
        .collect::<Result<Vec<_>, SolverError>>()?;
    Ok(DegradationSweep { axis, points })
}

/// Monte Carlo read of both states per sampled device with a sampled
/// comparator offset. The erased (down) state is taken as the HCS.
/// Scalars: BL voltages (mV), offset (mV) and the correctness of each bit
/// (1 or 0).
#[derive(Debug, Clone)]
pub struct ReadMc {
    pub circuit: ReadCircuitConfig,
    pub writes: WriteScheme,
    pub solver: SolverConfig,
    /// Reference capacitance shared by all samples, fF.
    pub c_ref: f64,
    /// Reads of the nominal device, reused when no parameter varies.
    nominal: Option<(f64, f64)>,
}

pub const READ_MC_SCALARS: [&str; 5] = ["v_hcs", "v_lcs", "offset", "bit1_ok", "bit0_ok"];

impl ReadMc {
    /// Prepares the experiment; the reference defaults to the nominal
    /// device's geometric-mean effective capacitance.
    pub fn new(
        params: &ModelParams,
        circuit: &ReadCircuitConfig,
        writes: &WriteScheme,
        solver: &SolverConfig,
    ) -> Result<Self, SolverError> {
        circuit.validate()?;
        let states = written_states(params, writes, solver)?;
        let c_ref = match circuit.c_ref {
            Some(c) => c,
            None => default_reference(&states, params, circuit, solver)?,
        };
        let mut nominal_params = params.clone();
        nominal_params.variability.retain(|_, s| *s > 0.0);
        let nominal = if nominal_params.variability.is_empty() {
            let (h, l) = Self::levels(&states, params, circuit, c_ref, solver)?;
            Some((h, l))
        } else {
            None
        };
        Ok(Self {
            circuit: *circuit,
            writes: *writes,
            solver: *solver,
            c_ref,
            nominal,
        })
    }

    /// BL voltages of the down (HCS) and up (LCS) states, mV.
    fn levels(
        states: &StoredStates,
        params: &ModelParams,
        circuit: &ReadCircuitConfig,
        c_ref: f64,
        solver: &SolverConfig,
    ) -> Result<(f64, f64), SolverError> {
        let h = read_once(&states.down, params, circuit, c_ref, 0.0, solver)?;
        let l = read_once(&states.up, params, circuit, c_ref, 0.0, solver)?;
        Ok((h.v_bl, l.v_bl))
    }
}

impl crate::montecarlo::McExperiment for ReadMc {
    fn name(&self) -> &str {
        "readout"
    }

    fn scalar_names(&self) -> Vec<String> {
        READ_MC_SCALARS.iter().map(|s| s.to_string()).collect()
    }

    fn evaluate(&self, params: &ModelParams, rng: &mut rand_chacha::ChaCha8Rng) -> crate::error::Result<Vec<f64>> {
        use rand_distr::{Distribution, StandardNormal};
        let z: f64 = StandardNormal.sample(rng);
        let offset = self.circuit.sa_offset_sigma * z;
        let (h, l) = match self.nominal {
            Some(levels) => levels,
            None => {
                let states = written_states(params, &self.writes, &self.solver)?;
                Self::levels(&states, params, &self.circuit, self.c_ref, &self.solver)?
            }
        };
        let thr = self.circuit.sa_threshold * 1e3 + offset;
        let ok = |b: bool| if b { 1.0 } else { 0.0 };
        Ok(vec![h, l, offset, ok(h > thr), ok(l <= thr)])
    }

    fn pass(&self, s: &[f64]) -> bool {
        s[3] == 1.0 && s[4] == 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadYield {
    pub c_ref: f64,
    /// Fraction of samples whose HCS reads as 1.
    pub yield_bit1: f64,
    /// Fraction of samples whose LCS reads as 0.
    pub yield_bit0: f64,
    /// Per-sample sense margin at zero offset, mV: the smaller distance of
    /// the two states from the threshold, negative on an intrinsic misread.
    pub margins: Vec<f64>,
    /// 1 %, 50 % and 99 % margin quantiles, mV.
    pub margin_percentiles: [f64; 3],
    /// Smallest zero-offset margin over the samples, mV: the largest
    /// comparator offset magnitude every sampled device tolerates.
    pub usable_offset: f64,
    /// Comparator threshold without offset, mV.
    pub threshold_mv: f64,
    pub report: crate::montecarlo::McReport,
}

impl ReadYield {
    /// Histogram of the BL voltage of one state (`"v_hcs"` or `"v_lcs"`)
    /// as `(bin centre mV, count)`.
    pub fn histogram(&self, column: &str, bins: usize) -> Vec<(f64, usize)> {
        let v = self.report.column(column).unwrap_or_default();
        histogram(&v, bins)
    }

    /// Yield of both bits when every device sees the fixed offset `offset_mv`.
    pub fn yield_at_offset(&self, offset_mv: f64) -> (f64, f64) {
        let hcs = self.report.column("v_hcs").unwrap_or_default();
        let lcs = self.report.column("v_lcs").unwrap_or_default();
        let n = hcs.len().max(1) as f64;
        let t = self.threshold_mv + offset_mv;
        (
            hcs.iter().filter(|&&h| h > t).count() as f64 / n,
            lcs.iter().filter(|&&l| l <= t).count() as f64 / n,
        )
    }
}

/// Equal-width histogram as `(bin centre, count)`.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, usize)> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = (((v - lo) / w) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (lo + (k as f64 + 0.5) * w, c))
        .collect()
}

/// Read yield over device variability and comparator offset.
pub fn read_yield(
    params: &ModelParams,
    circuit: &ReadCircuitConfig,
    writes: &WriteScheme,
    n_samples: usize,
    seed: u64,
    solver: &SolverConfig,
) -> crate::error::Result<ReadYield> {
    let exp = ReadMc::new(params, circuit, writes, solver)?;
    let report = crate::montecarlo::run_mc(&exp, params, n_samples, seed)?;
    let col = |n: &str| report.column(n).unwrap_or_default();
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let thr = circuit.sa_threshold * 1e3;
    let margins: Vec<f64> = col("v_hcs")
        .iter()
        .zip(col("v_lcs"))
        .map(|(h, l)| (h - thr).min(thr - l))
        .collect();
    let mut sorted = margins.clone();
    sorted.sort_by(f64::total_cmp);
    let q = |p| crate::montecarlo::quantile(&sorted, p);
    Ok(ReadYield {
        c_ref: exp.c_ref,
        yield_bit1: mean(col("bit1_ok")),
        yield_bit0: mean(col("bit0_ok")),
        margin_percentiles: [q(0.01), q(0.5), q(0.99)],
        usable_offset: sorted.first().copied().unwrap_or(f64::NAN),
        threshold_mv: thr,
        margins,
        report,
    })
}
