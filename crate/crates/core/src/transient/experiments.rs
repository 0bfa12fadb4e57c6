//! Canned experiments built on the simulator.
//!
//! Polarity convention: a positive write drives the film down (`p → 1`),
//! which is the high-capacitance state (erase); a negative write drives it
//! up (`p → 0`), the low-capacitance state (program).

use serde::{Deserialize, Serialize};

use crate::electrostatics::{small_signal_capacitance, AcProbe, F_PER_CM2_TO_FF_PER_UM2};
use crate::error::SolverError;
use crate::params::ModelParams;
use crate::state::DeviceState;
use crate::transient::engine::SolverConfig;
use crate::transient::simulator::{Sample, Simulator};

fn ignore(_: &Sample) {}

/// Trapezoidal write pulse from 0 V.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WritePulse {
    /// V; the sign selects the target state.
    pub amplitude: f64,
    /// Plateau, s.
    pub width: f64,
    /// Rise and fall time, s.
    pub edge: f64,
    /// Time at 0 V after the pulse, s.
    pub settle: f64,
}

impl WritePulse {
    pub fn erase() -> Self {
        Self {
            amplitude: 4.0,
            width: 1e-3,
            edge: 1e-6,
            settle: 1e-3,
        }
    }

    pub fn program() -> Self {
        Self {
            amplitude: -4.0,
            ..Self::erase()
        }
    }

    /// Applies the pulse starting from the present bias, ending at 0 V.
    pub fn apply(&self, sim: &mut Simulator) -> Result<(), SolverError> {
        if sim.v != 0.0 {
            sim.ramp(0.0, self.edge, "return", &mut ignore)?;
        }
        sim.ramp(self.amplitude, self.edge, "write_rise", &mut ignore)?;
        sim.hold(self.width, "write", &mut ignore)?;
        sim.ramp(0.0, self.edge, "write_fall", &mut ignore)?;
        if self.settle > 0.0 {
            sim.hold(self.settle, "settle", &mut ignore)?;
        }
        Ok(())
    }
}

/// How a capacitance read is taken from a prepared state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadSettings {
    /// Ramp time from the present bias to the read bias, s.
    pub ramp: f64,
    /// DC dwell before probing, s.
    pub dwell: f64,
    pub probe: AcProbe,
}

impl Default for ReadSettings {
    fn default() -> Self {
        Self {
            ramp: 1e-6,
            dwell: 10e-3,
            probe: AcProbe::default(),
        }
    }
}

/// Small-signal capacitance (fF/µm²) at DC `bias`, read on a copy of `sim`.
pub fn read_capacitance(sim: &Simulator, bias: f64, read: &ReadSettings) -> Result<f64, SolverError> {
    let mut s = sim.clone();
    if s.v != bias {
        s.ramp(bias, read.ramp, "read_ramp", &mut ignore)?;
    }
    if read.dwell > 0.0 {
        s.hold(read.dwell, "read_dwell", &mut ignore)?;
    }
    Ok(small_signal_capacitance(&s, &read.probe)? * F_PER_CM2_TO_FF_PER_UM2)
}

/// Simulator at 0 V in the default initial state.
pub fn fresh(params: &ModelParams, cfg: &SolverConfig) -> Result<Simulator, SolverError> {
    Simulator::new(params, *cfg, DeviceState::default())
}

/// Capacitances of the two stored states at a set of read biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryWindow {
    pub biases: Vec<f64>,
    /// fF/µm²
    pub c_hcs: Vec<f64>,
    pub c_lcs: Vec<f64>,
    pub p_hcs: f64,
    pub p_lcs: f64,
}

impl MemoryWindow {
    /// ΔC = C_HCS − C_LCS at each bias, fF/µm².
    pub fn delta(&self) -> Vec<f64> {
        self.c_hcs.iter().zip(&self.c_lcs).map(|(h, l)| h - l).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub erase: WritePulse,
    pub program: WritePulse,
    pub biases: Vec<f64>,
    pub read: ReadSettings,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            erase: WritePulse::erase(),
            program: WritePulse::program(),
            biases: vec![0.0, 0.2],
            read: ReadSettings::default(),
        }
    }
}

/// Writes each state from the default initial state and reads it back.
pub fn memory_window(params: &ModelParams, wc: &WindowConfig, cfg: &SolverConfig) -> Result<MemoryWindow, SolverError> {
    let mut hcs = fresh(params, cfg)?;
    wc.erase.apply(&mut hcs)?;
    let mut lcs = fresh(params, cfg)?;
    wc.program.apply(&mut lcs)?;
    let read = |s: &Simulator| {
        wc.biases
            .iter()
            .map(|&b| read_capacitance(s, b, &wc.read))
            .collect::<Result<Vec<_>, _>>()
    };
    Ok(MemoryWindow {
        biases: wc.biases.clone(),
        c_hcs: read(&hcs)?,
        c_lcs: read(&lcs)?,
        p_hcs: hcs.state.p,
        p_lcs: lcs.state.p,
    })
}

/// Quasi-static C–V staircase settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub v_min: f64,
    pub v_max: f64,
    pub v_step: f64,
    /// DC dwell per staircase point before probing, s.
    pub dwell: f64,
    /// Transition time between staircase points, s.
    pub step_time: f64,
    pub probe: AcProbe,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            v_min: -2.0,
            v_max: 2.0,
            v_step: 0.1,
            dwell: 10e-3,
            step_time: 1e-6,
            probe: AcProbe::default(),
        }
    }
}

impl CvConfig {
    pub fn levels(&self) -> Vec<f64> {
        let n = ((self.v_max - self.v_min) / self.v_step).round() as usize;
        (0..=n)
            .map(|i| self.v_min + (self.v_max - self.v_min) * i as f64 / n as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvPoint {
    /// V
    pub v: f64,
    /// fF/µm²
    pub c: f64,
    pub p: f64,
    /// C/m²
    pub q_trap_dyn: f64,
    /// Depletion polarities clamped at the DC point.
    pub clamp_count: u32,
}

/// Both branches of a C–V loop; `up` is the increasing-voltage sweep.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CvCurve {
    pub up: Vec<CvPoint>,
    pub down: Vec<CvPoint>,
}

impl CvCurve {
    fn at(branch: &[CvPoint], v: f64) -> Option<f64> {
        branch.windows(2).find_map(|w| {
            let (a, b) = if w[0].v <= w[1].v { (w[0], w[1]) } else { (w[1], w[0]) };
            (v >= a.v && v <= b.v).then(|| {
                if b.v == a.v {
                    a.c
                } else {
                    a.c + (b.c - a.c) * (v - a.v) / (b.v - a.v)
                }
            })
        })
    }

    /// Up-branch capacitance interpolated at `v`, fF/µm².
    pub fn up_at(&self, v: f64) -> Option<f64> {
        Self::at(&self.up, v)
    }

    pub fn down_at(&self, v: f64) -> Option<f64> {
        Self::at(&self.down, v)
    }

    fn peak(branch: &[CvPoint]) -> Option<CvPoint> {
        branch.iter().copied().max_by(|a, b| a.c.total_cmp(&b.c))
    }

    /// Maximum of the up branch.
    pub fn up_peak(&self) -> Option<CvPoint> {
        Self::peak(&self.up)
    }

    pub fn down_peak(&self) -> Option<CvPoint> {
        Self::peak(&self.down)
    }

    /// Voltage at which a branch's polarization fraction crosses one half.
    fn switching_voltage(branch: &[CvPoint]) -> Option<f64> {
        branch.windows(2).find_map(|w| {
            let (a, b) = (w[0], w[1]);
            ((a.p - 0.5) * (b.p - 0.5) <= 0.0 && a.p != b.p).then(|| a.v + (0.5 - a.p) * (b.v - a.v) / (b.p - a.p))
        })
    }

    /// Built-in bias: midpoint of the two switching voltages, V.
    ///
    /// Taken from the polarization crossings rather than the capacitance
    /// peaks so it is not quantized by the staircase step.
    pub fn built_in_bias(&self) -> Option<f64> {
        Some(0.5 * (Self::switching_voltage(&self.up)? + Self::switching_voltage(&self.down)?))
    }

    /// Largest capacitance at positive bias over the largest at negative
    /// bias, both branches included.
    pub fn peak_asymmetry(&self) -> Option<f64> {
        let max_where = |pos: bool| {
            self.up
                .iter()
                .chain(&self.down)
                .filter(|p| if pos { p.v > 0.0 } else { p.v < 0.0 })
                .map(|p| p.c)
                .fold(None, |m: Option<f64>, c| Some(m.map_or(c, |m| m.max(c))))
        };
        Some(max_where(true)? / max_where(false)?)
    }
}

/// Quasi-static C–V loop `v_min → v_max → v_min` with an AC probe per point.
///
/// The device starts from the default state, is held at `v_min` for one
/// dwell so the loop starts from a saturated state, then swept.
pub fn experiment_cv(params: &ModelParams, cv: &CvConfig, cfg: &SolverConfig) -> Result<CvCurve, SolverError> {
    if !(cv.v_step > 0.0 && cv.v_max > cv.v_min && cv.dwell >= 0.0 && cv.step_time > 0.0) {
        return Err(SolverError::Waveform(format!("invalid C-V sweep {cv:?}")));
    }
    let mut sim = fresh(params, cfg)?;
    sim.ramp(
        cv.v_min,
        cv.step_time.max((cv.v_min.abs()) * 1e-6),
        "precondition",
        &mut ignore,
    )?;
    sim.hold(cv.dwell.max(1e-6), "precondition", &mut ignore)?;
    let levels = cv.levels();
    let mut curve = CvCurve::default();
    let point = |sim: &mut Simulator, v: f64, label: &str| -> Result<CvPoint, SolverError> {
        if sim.v != v {
            sim.ramp(v, cv.step_time, label, &mut ignore)?;
        }
        if cv.dwell > 0.0 {
            sim.hold(cv.dwell, label, &mut ignore)?;
        }
        let c = small_signal_capacitance(sim, &cv.probe)? * F_PER_CM2_TO_FF_PER_UM2;
        let s = sim.state;
        let clamp_count = crate::electrostatics::cap_breakdown(s.v_fe / params.t_fe_si(), s.p, params).clamp_count;
        Ok(CvPoint {
            v,
            c,
            p: s.p,
            q_trap_dyn: s.q_trap_dyn,
            clamp_count,
        })
    };
    for &v in &levels {
        curve.up.push(point(&mut sim, v, "cv_up")?);
    }
    for &v in levels.iter().rev() {
        curve.down.push(point(&mut sim, v, "cv_down")?);
    }
    Ok(curve)
}

/// PUND sequence with triangular pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PundConfig {
    /// V
    pub amplitude: f64,
    /// Pulse repetition frequency, Hz; each pulse lasts one period.
    pub frequency: f64,
    /// Number of P-U-N-D repetitions after the negative preset pulse.
    pub cycles: usize,
}

impl Default for PundConfig {
    fn default() -> Self {
        Self {
            amplitude: 3.0,
            frequency: 1e3,
            cycles: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvPoint {
    /// V
    pub v: f64,
    /// Switched polarization, µC/cm².
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PundResult {
    /// Switched-charge loop of the last cycle.
    pub loop_points: Vec<PvPoint>,
    /// 2·P_r of the last cycle from the retained switchable polarization
    /// after the P and N pulses, µC/cm².
    pub two_pr: f64,
    /// 2·P_r of the last cycle from the switched terminal charge, µC/cm².
    /// This also contains the dielectric charge from the different
    /// depolarization fields of the two retained states.
    pub two_pr_charge: f64,
    /// Switched charge of each P pulse minus its U pulse, µC/cm².
    pub switched_positive: Vec<f64>,
    /// Switched charge of each N pulse minus its D pulse, µC/cm².
    pub switched_negative: Vec<f64>,
    /// Mismatch of the last cycle's positive and negative switched charge, as a fraction of 2·P_s.
    pub closure: f64,
    /// Down fraction at the end of every cycle.
    pub p_end: Vec<f64>,
    pub trace: super::TraceSet,
}

struct PulseRecord {
    tau: Vec<f64>,
    v: Vec<f64>,
    q: Vec<f64>,
}

impl PulseRecord {
    fn q_at(&self, tau: f64) -> f64 {
        let i = self.tau.partition_point(|&t| t < tau);
        if i == 0 {
            return self.q[0];
        }
        if i >= self.tau.len() {
            return *self.q.last().unwrap_or(&0.0);
        }
        let (t0, t1) = (self.tau[i - 1], self.tau[i]);
        self.q[i - 1] + (self.q[i] - self.q[i - 1]) * (tau - t0) / (t1 - t0)
    }

    fn net(&self) -> f64 {
        self.q.last().unwrap_or(&0.0) - self.q[0]
    }
}

fn triangular_pulse(
    sim: &mut Simulator,
    amplitude: f64,
    period: f64,
    label: &str,
    trace: &mut super::TraceSet,
) -> Result<PulseRecord, SolverError> {
    let p_sw_uc = sim.device().params().p_switch_si() * 100.0;
    let (t0, q0) = (sim.t, sim.q_terminal);
    let mut rec = PulseRecord {
        tau: vec![0.0],
        v: vec![sim.v],
        q: vec![0.0],
    };
    let mut obs = |s: &Sample| {
        rec.tau.push(s.t - t0);
        rec.v.push(s.v_applied);
        rec.q.push(s.q_terminal - q0);
        trace.push(s.t, s.v_applied, s.state, s.currents, p_sw_uc, s.q_terminal, s.segment);
    };
    sim.ramp(amplitude, period / 2.0, label, &mut obs)?;
    sim.ramp(0.0, period / 2.0, label, &mut obs)?;
    Ok(rec)
}

fn hold_recorded(sim: &mut Simulator, duration: f64, trace: &mut super::TraceSet) -> Result<(), SolverError> {
    let p_sw_uc = sim.device().params().p_switch_si() * 100.0;
    sim.hold(duration, "delay", &mut |s| {
        trace.push(s.t, s.v_applied, s.state, s.currents, p_sw_uc, s.q_terminal, s.segment)
    })
}

/// Standard five-pulse PUND: a negative preset, then P, U, N, D repeated.
///
/// The switched charge of a pulse pair is the terminal charge of the first
/// pulse minus that of the second at equal time into the pulse, which
/// removes the dielectric and leakage contributions.
pub fn experiment_pund(params: &ModelParams, pund: &PundConfig, cfg: &SolverConfig) -> Result<PundResult, SolverError> {
    if !(pund.frequency > 0.0 && pund.amplitude > 0.0 && pund.cycles > 0) {
        return Err(SolverError::Waveform(format!("invalid PUND settings {pund:?}")));
    }
    let period = 1.0 / pund.frequency;
    let mut sim = fresh(params, cfg)?;
    let mut trace = super::TraceSet::default();
    let to_uc = 100.0;
    triangular_pulse(&mut sim, -pund.amplitude, period, "preset", &mut trace)?;
    hold_recorded(&mut sim, period, &mut trace)?;
    let mut result = PundResult {
        loop_points: Vec::new(),
        two_pr: 0.0,
        two_pr_charge: 0.0,
        switched_positive: Vec::new(),
        switched_negative: Vec::new(),
        closure: 0.0,
        p_end: Vec::new(),
        trace: super::TraceSet::default(),
    };
    for c in 0..pund.cycles {
        let mut recs = Vec::with_capacity(4);
        let mut p_after = [0.0; 4];
        for (k, (name, sign)) in [("P", 1.0), ("U", 1.0), ("N", -1.0), ("D", -1.0)]
            .into_iter()
            .enumerate()
        {
            let label = format!("{name}{}", c + 1);
            recs.push(triangular_pulse(
                &mut sim,
                sign * pund.amplitude,
                period,
                &label,
                &mut trace,
            )?);
            hold_recorded(&mut sim, period, &mut trace)?;
            p_after[k] = sim.state.p;
        }
        let sw_pos = (recs[0].net() - recs[1].net()) * to_uc;
        let sw_neg = (recs[2].net() - recs[3].net()) * to_uc;
        result.switched_positive.push(sw_pos);
        result.switched_negative.push(sw_neg);
        result.p_end.push(sim.state.p);
        if c + 1 == pund.cycles {
            result.two_pr = 2.0 * params.p_switch_si() * (p_after[1] - p_after[3]) * to_uc;
            result.two_pr_charge = 0.5 * (sw_pos - sw_neg);
            result.closure = (sw_pos + sw_neg).abs() / (2.0 * params.p_s);
            let mut pts = Vec::new();
            for (first, second, start) in [(&recs[0], &recs[1], -0.5 * sw_pos), (&recs[2], &recs[3], -0.5 * sw_neg)] {
                for ((&tau, &v), &q) in first.tau.iter().zip(&first.v).zip(&first.q) {
                    pts.push(PvPoint {
                        v,
                        p: start + (q - second.q_at(tau)) * to_uc,
                    });
                }
            }
            result.loop_points = pts;
        }
    }
    result.trace = trace;
    Ok(result)
}

/// Target state of a switching-kinetics experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KineticsTarget {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticsConfig {
    pub target: KineticsTarget,
    /// Pulse magnitudes, V (the sign follows the target).
    pub amplitudes: Vec<f64>,
    /// Pulse plateau widths, s.
    pub widths: Vec<f64>,
    /// Write used to prepare the opposite state.
    pub reset: WritePulse,
}

impl Default for KineticsConfig {
    fn default() -> Self {
        Self {
            target: KineticsTarget::Down,
            amplitudes: vec![2.0, 2.5, 3.0, 3.5, 4.0],
            widths: (0..=12).map(|k| 1e-8 * 10f64.powf(k as f64 / 2.0)).collect(),
            reset: WritePulse::program(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KineticsPoint {
    /// V
    pub amplitude: f64,
    /// s
    pub width: f64,
    /// Down fraction after the pulse.
    pub p: f64,
    /// Switched fraction towards the target, in [0, 1].
    pub switched: f64,
}

/// Switched fraction after single pulses of every amplitude and width,
/// each applied to a freshly reset device.
pub fn experiment_kinetics(
    params: &ModelParams,
    kc: &KineticsConfig,
    cfg: &SolverConfig,
) -> Result<Vec<KineticsPoint>, SolverError> {
    let (sign, reset) = match kc.target {
        KineticsTarget::Down => (
            1.0,
            WritePulse {
                amplitude: -kc.reset.amplitude.abs(),
                ..kc.reset
            },
        ),
        KineticsTarget::Up => (
            -1.0,
            WritePulse {
                amplitude: kc.reset.amplitude.abs(),
                ..kc.reset
            },
        ),
    };
    let mut base = fresh(params, cfg)?;
    reset.apply(&mut base)?;
    let p0 = base.state.p;
    let mut out = Vec::with_capacity(kc.amplitudes.len() * kc.widths.len());
    for &a in &kc.amplitudes {
        for &w in &kc.widths {
            let mut sim = base.clone();
            let pulse = WritePulse {
                amplitude: sign * a.abs(),
                width: w,
                edge: (w / 10.0).min(10e-9),
                settle: 0.0,
            };
            pulse.apply(&mut sim)?;
            let p = sim.state.p;
            let switched = match kc.target {
                KineticsTarget::Down => (p - p0) / (1.0 - p0),
                KineticsTarget::Up => (p0 - p) / p0,
            };
            out.push(KineticsPoint {
                amplitude: a.abs(),
                width: w,
                p,
                switched: if switched.is_finite() {
                    switched.clamp(0.0, 1.0)
                } else {
                    0.0
                },
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EraseConfig {
    /// V
    pub v_start: f64,
    pub v_stop: f64,
    pub v_step: f64,
    /// Erase plateau width, s.
    pub width: f64,
    /// Erase rise and fall time, s.
    pub edge: f64,
    /// Time at 0 V after each erase pulse, s.
    pub settle: f64,
    pub read_biases: Vec<f64>,
    pub read: ReadSettings,
    /// Initialization into the program state.
    pub program: WritePulse,
}

impl Default for EraseConfig {
    fn default() -> Self {
        Self {
            v_start: 2.5,
            v_stop: 4.0,
            v_step: 0.25,
            width: 1e-6,
            edge: 100e-9,
            settle: 1e-3,
            read_biases: vec![0.0, 0.2],
            read: ReadSettings::default(),
            program: WritePulse::program(),
        }
    }
}

impl EraseConfig {
    pub fn amplitudes(&self) -> Vec<f64> {
        let n = ((self.v_stop - self.v_start) / self.v_step).round().max(0.0) as usize;
        (0..=n).map(|i| self.v_start + self.v_step * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EraseRow {
    /// V
    pub amplitude: f64,
    pub p: f64,
    /// fF/µm², one per read bias.
    pub c: Vec<f64>,
}

/// Gradual erase: program once, then apply erase pulses of increasing
/// amplitude, reading the capacitance after each.
pub fn experiment_erase_staircase(
    params: &ModelParams,
    ec: &EraseConfig,
    cfg: &SolverConfig,
) -> Result<Vec<EraseRow>, SolverError> {
    if !(ec.v_step > 0.0 && ec.width > 0.0 && ec.edge > 0.0) {
        return Err(SolverError::Waveform(format!("invalid erase staircase {ec:?}")));
    }
    let mut sim = fresh(params, cfg)?;
    ec.program.apply(&mut sim)?;
    let mut rows = Vec::new();
    for a in ec.amplitudes() {
        WritePulse {
            amplitude: a,
            width: ec.width,
            edge: ec.edge,
            settle: ec.settle,
        }
        .apply(&mut sim)?;
        let c = ec
            .read_biases
            .iter()
            .map(|&b| read_capacitance(&sim, b, &ec.read))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(EraseRow {
            amplitude: a,
            p: sim.state.p,
            c,
        });
    }
    Ok(rows)
}

/// One row of an ingested defect-density table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectRow {
    pub cycles: f64,
    /// cm⁻³
    pub n_tr_fe: f64,
    /// cm⁻³; when absent the interface density is left at its base value.
    pub n_tr_int: Option<f64>,
}

/// Trap densities as a function of the number of endurance cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DefectTrajectory {
    /// `n_tr(n) = n_tr,0·(1 + (n/n0)^γ)` applied to the FE density and
    /// optionally to the interface density.
    Power {
        n0: f64,
        gamma: f64,
        include_interface: bool,
    },
    /// Log-log interpolation in a table sorted by cycles.
    Table(Vec<DefectRow>),
}

impl Default for DefectTrajectory {
    fn default() -> Self {
        Self::Power {
            n0: 1e6,
            gamma: 1.0,
            include_interface: true,
        }
    }
}

fn log_interp(x: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    if y0 <= 0.0 || y1 <= 0.0 || x0 <= 0.0 || x1 <= 0.0 || x0 == x1 {
        return if x0 == x1 {
            y0
        } else {
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        };
    }
    let f = (x.max(f64::MIN_POSITIVE).ln() - x0.ln()) / (x1.ln() - x0.ln());
    (y0.ln() + f * (y1.ln() - y0.ln())).exp()
}

impl DefectTrajectory {
    /// Parameters with trap densities overridden for `cycles`.
    pub fn apply(&self, base: &ModelParams, cycles: f64) -> ModelParams {
        let mut p = base.clone();
        match self {
            Self::Power {
                n0,
                gamma,
                include_interface,
            } => {
                let f = 1.0 + (cycles.max(0.0) / n0).powf(*gamma);
                p.n_tr_fe *= f;
                if *include_interface {
                    p.n_tr_int *= f;
                }
            }
            Self::Table(rows) if !rows.is_empty() => {
                let i = rows.partition_point(|r| r.cycles < cycles);
                let (a, b) = if i == 0 {
                    (rows[0], rows[0])
                } else if i >= rows.len() {
                    (rows[rows.len() - 1], rows[rows.len() - 1])
                } else {
                    (rows[i - 1], rows[i])
                };
                p.n_tr_fe = if a.cycles == b.cycles {
                    a.n_tr_fe
                } else {
                    log_interp(cycles, a.cycles, b.cycles, a.n_tr_fe, b.n_tr_fe)
                };
                if let (Some(ia), Some(ib)) = (a.n_tr_int, b.n_tr_int) {
                    p.n_tr_int = if a.cycles == b.cycles {
                        ia
                    } else {
                        log_interp(cycles, a.cycles, b.cycles, ia, ib)
                    };
                }
            }
            Self::Table(_) => {}
        }
        p.n_tr_fe = p.n_tr_fe.max(0.0);
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnduranceConfig {
    /// Cycle counts at which the device is characterized.
    pub checkpoints: Vec<f64>,
    pub trajectory: DefectTrajectory,
    pub window: WindowConfig,
    /// Bias points of the leakage sweep, V.
    pub leakage_voltages: Vec<f64>,
}

impl Default for EnduranceConfig {
    fn default() -> Self {
        Self {
            checkpoints: [1e3, 1e4, 1e5, 1e6, 1e7].to_vec(),
            trajectory: DefectTrajectory::default(),
            window: WindowConfig::default(),
            leakage_voltages: vec![0.5, 1.0, 1.5, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnduranceRow {
    pub cycles: f64,
    /// cm⁻³
    pub n_tr_fe: f64,
    pub n_tr_int: f64,
    pub window: MemoryWindow,
    /// FE and interface leakage, A/cm², at each sweep voltage.
    pub j_fe: Vec<f64>,
    pub j_int: Vec<f64>,
}

/// Capacitance window and leakage at each checkpoint, with trap densities
/// taken from the defect trajectory instead of simulating every cycle.
pub fn experiment_endurance(
    params: &ModelParams,
    ec: &EnduranceConfig,
    cfg: &SolverConfig,
) -> Result<Vec<EnduranceRow>, crate::error::Error> {
    let mut rows = Vec::with_capacity(ec.checkpoints.len());
    for &n in &ec.checkpoints {
        let p = ec.trajectory.apply(params, n);
        let window = memory_window(&p, &ec.window, cfg)?;
        let leak = crate::leakage::leakage_sweep(&p, &ec.leakage_voltages)?;
        rows.push(EnduranceRow {
            cycles: n,
            n_tr_fe: p.n_tr_fe,
            n_tr_int: p.n_tr_int,
            window,
            j_fe: leak.iter().map(|l| l.j_fe).collect(),
            j_int: leak.iter().map(|l| l.j_int).collect(),
        });
    }
    Ok(rows)
}
