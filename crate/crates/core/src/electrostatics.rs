//! Static capacitances and the depletion-layer voltage.
//!
//! The depletion region at the ferroelectric/interface boundary screens the
//! bound charge that the trapped charge of each domain type fails to
//! compensate. Its differential capacitance depends on the polarity-specific
//! uncompensated charge and on the dielectric displacement in the
//! ferroelectric. Internally every quantity is SI (F/m², C/m², V); the public
//! per-area capacitances are reported in F/cm².

use crate::constants::{EPS_0, Q};
use crate::error::ModelError;
use crate::params::ModelParams;

/// Fraction of P_s below which the uncompensated-charge denominator is floored.
pub const DENOMINATOR_FLOOR: f64 = 1e-3;

const F_PER_M2_TO_F_PER_CM2: f64 = 1e-4;

/// Domain polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Up,
    Down,
}

/// Precomputed depletion-layer constants in SI units.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Depletion {
    /// ε_depl·ε₀·q·N_depl, numerator of the capacitance.
    pub num: f64,
    /// Uncompensated charge of down domains, P_s − qN↓.
    pub a: f64,
    /// Uncompensated charge of up domains, P_s − qN↑.
    pub b: f64,
    pub floor: f64,
    /// ε₀·ε_fe, converts field to displacement.
    pub eps_fe: f64,
    /// ε_mix/ε_fe, converts displacement to stored charge.
    pub mix_ratio: f64,
}

impl Depletion {
    pub fn new(p: &ModelParams) -> Self {
        let ps = p.p_s_si();
        Self {
            num: p.eps_depl * EPS_0 * Q * p.n_depl_si(),
            a: ps - p.q_tr_down_si(),
            b: ps - p.q_tr_up_si(),
            floor: DENOMINATOR_FLOOR * ps,
            eps_fe: p.eps_fe_abs(),
            mix_ratio: p.eps_fe_mix() / p.eps_fe,
        }
    }

    fn raw_den(&self, x: f64, pol: Polarity) -> f64 {
        match pol {
            Polarity::Down => x + self.a,
            Polarity::Up => x - self.b,
        }
    }

    /// Polarity capacitance (F/m²) at displacement `x` and whether the floor engaged.
    pub fn polar(&self, x: f64, pol: Polarity) -> (f64, bool) {
        let d = self.raw_den(x, pol).abs();
        if d < self.floor {
            (self.num / self.floor, true)
        } else {
            (self.num / d, false)
        }
    }

    /// Domain-weighted capacitance (F/m²) and the number of clamped polarities.
    pub fn total(&self, x: f64, p: f64) -> (f64, u32) {
        let (cd, kd) = self.polar(x, Polarity::Down);
        let (cu, ku) = self.polar(x, Polarity::Up);
        (p * cd + (1.0 - p) * cu, kd as u32 + ku as u32)
    }

    /// Displacement entering the depletion denominators for FE field `e_fe`.
    ///
    /// The field is counted along the up-polarization direction, so a
    /// positive applied voltage (which drives the film down) gives a
    /// negative displacement.
    pub fn displacement(&self, e_fe: f64) -> f64 {
        -self.eps_fe * e_fe
    }

    /// Depletion voltage (V) in the applied-voltage sense at FE field `e_fe`.
    pub fn voltage_at_field(&self, e_fe: f64, p: f64) -> f64 {
        -self.voltage(self.displacement(e_fe), p)
    }

    /// d v_depl / d e_fe, in m.
    pub fn dvoltage_dfield(&self, e_fe: f64, p: f64) -> f64 {
        self.dvoltage_dx(self.displacement(e_fe), p) * self.eps_fe
    }

    /// Displacement at which the depletion layer carries no voltage.
    pub fn x_ref(&self, p: f64) -> f64 {
        (1.0 - p) * self.b - p * self.a
    }

    /// Depletion voltage (V) at displacement `x` for down fraction `p`.
    ///
    /// This is `(ε_mix/ε_fe)·∫ dx / C(x)` from the reference displacement,
    /// evaluated exactly on each linear piece of the floored denominators.
    pub fn voltage(&self, x: f64, p: f64) -> f64 {
        let x0 = self.x_ref(p);
        let (lo, hi, sign) = if x >= x0 { (x0, x, 1.0) } else { (x, x0, -1.0) };
        let mut knots = [
            -self.a - self.floor,
            -self.a + self.floor,
            self.b - self.floor,
            self.b + self.floor,
        ];
        knots.sort_by(f64::total_cmp);
        let mut acc = 0.0;
        let mut s = lo;
        for k in knots
            .into_iter()
            .filter(|&k| k > lo && k < hi)
            .chain(std::iter::once(hi))
        {
            acc += self.piece(s, k, p);
            s = k;
        }
        sign * self.mix_ratio * acc / self.num
    }

    /// Slope of [`Depletion::voltage`] with respect to displacement.
    pub fn dvoltage_dx(&self, x: f64, p: f64) -> f64 {
        self.mix_ratio / self.total(x, p).0
    }

    // slope of a floored |·| at an interior point of one linear piece
    fn slope(&self, shifted: f64) -> f64 {
        if shifted >= self.floor {
            1.0
        } else if shifted <= -self.floor {
            -1.0
        } else {
            0.0
        }
    }

    // ∫ U·W / (p·W + (1−p)·U) ds over [s0, s1], with U and W linear there
    fn piece(&self, s0: f64, s1: f64, p: f64) -> f64 {
        if s1 <= s0 {
            return 0.0;
        }
        let m = 0.5 * (s0 + s1);
        let h = 0.5 * (s1 - s0);
        let u1 = self.slope(m + self.a);
        let w1 = self.slope(m - self.b);
        let u0 = if u1 == 0.0 { self.floor } else { u1 * (m + self.a) };
        let w0 = if w1 == 0.0 { self.floor } else { w1 * (m - self.b) };
        if p <= 0.0 {
            return 2.0 * h * w0;
        }
        if p >= 1.0 {
            return 2.0 * h * u0;
        }
        let n2 = u1 * w1;
        let n1 = u1 * w0 + w1 * u0;
        let n0 = u0 * w0;
        let d1 = p * w1 + (1.0 - p) * u1;
        let d0 = p * w0 + (1.0 - p) * u0;
        let z = d1 * h / d0;
        if z.abs() < 1e-3 {
            // power series of 1/(d0 + d1·y), only even powers survive the symmetric integral
            let r = -d1 / d0;
            let mut coef = [0.0f64; 12];
            let mut rk = 1.0 / d0;
            for k in 0..10 {
                coef[k] += n0 * rk;
                coef[k + 1] += n1 * rk;
                coef[k + 2] += n2 * rk;
                rk *= r;
            }
            coef.iter()
                .enumerate()
                .step_by(2)
                .map(|(n, c)| c * 2.0 * h.powi(n as i32 + 1) / (n as f64 + 1.0))
                .sum()
        } else {
            let alpha = n2 / d1;
            let beta = (n1 - alpha * d0) / d1;
            let gamma = n0 - beta * d0;
            2.0 * beta * h + 2.0 * gamma / d1 * z.atanh()
        }
    }
}

fn displacement(e_fe: f64, p: &ModelParams) -> f64 {
    Depletion::new(p).displacement(e_fe)
}

/// Depletion capacitance of one polarity at FE field `e_fe` (V/m), F/cm².
///
/// Fails when the uncompensated charge vanishes at this field.
pub fn c_depl_polar(e_fe: f64, pol: Polarity, params: &ModelParams) -> Result<f64, ModelError> {
    let dep = Depletion::new(params);
    let x = displacement(e_fe, params);
    let den = dep.raw_den(x, pol);
    if den.abs() < dep.floor {
        return Err(ModelError::Singular(format!(
            "uncompensated {pol:?} charge {den:.3e} C/m² is below the floor {:.3e} C/m²",
            dep.floor
        )));
    }
    Ok(dep.num / den.abs() * F_PER_M2_TO_F_PER_CM2)
}

/// As [`c_depl_polar`], flooring the denominator instead of failing.
/// Returns the capacitance in F/cm² and whether the floor engaged.
pub fn c_depl_polar_clamped(e_fe: f64, pol: Polarity, params: &ModelParams) -> (f64, bool) {
    let (c, k) = Depletion::new(params).polar(displacement(e_fe, params), pol);
    (c * F_PER_M2_TO_F_PER_CM2, k)
}

/// Domain-weighted depletion capacitance, F/cm².
pub fn c_depl_total(p: f64, e_fe: f64, params: &ModelParams) -> Result<f64, ModelError> {
    let down = c_depl_polar(e_fe, Polarity::Down, params);
    let up = c_depl_polar(e_fe, Polarity::Up, params);
    match (p, down, up) {
        (p, Ok(d), _) if p >= 1.0 => Ok(d),
        (p, _, Ok(u)) if p <= 0.0 => Ok(u),
        (p, Ok(d), Ok(u)) => Ok(p * d + (1.0 - p) * u),
        (_, Err(e), _) | (_, _, Err(e)) => Err(e),
    }
}

/// Linear ferroelectric capacitance ε₀·ε_mix/t_fe, F/cm².
pub fn c_fe_linear(params: &ModelParams) -> f64 {
    EPS_0 * params.eps_fe_mix() / params.t_fe_si() * F_PER_M2_TO_F_PER_CM2
}

/// Interface-layer capacitance ε₀·ε_int/t_int, F/cm².
pub fn c_int(params: &ModelParams) -> f64 {
    EPS_0 * params.eps_int / params.t_int_si() * F_PER_M2_TO_F_PER_CM2
}

/// Series combination of the static layer capacitances, F/cm².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapBreakdown {
    pub c_fe: f64,
    pub c_int: f64,
    pub c_depl: f64,
    pub c_series: f64,
    pub clamp_count: u32,
}

/// Layer capacitances at FE field `e_fe` and down fraction `p`.
pub fn cap_breakdown(e_fe: f64, p: f64, params: &ModelParams) -> CapBreakdown {
    let (cd, k) = Depletion::new(params).total(displacement(e_fe, params), p);
    let c_depl = cd * F_PER_M2_TO_F_PER_CM2;
    let c_fe = c_fe_linear(params);
    let c_i = c_int(params);
    CapBreakdown {
        c_fe,
        c_int: c_i,
        c_depl,
        c_series: 1.0 / (1.0 / c_fe + 1.0 / c_i + 1.0 / c_depl),
        clamp_count: k,
    }
}

/// Depletion voltage (V) for a ferroelectric voltage `v_fe` and down fraction `p`.
pub fn depletion_voltage(v_fe: f64, p: f64, params: &ModelParams) -> f64 {
    Depletion::new(params).voltage_at_field(v_fe / params.t_fe_si(), p)
}

/// Small-signal probe superimposed on a DC operating point.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AcProbe {
    /// Peak amplitude, V.
    pub amplitude: f64,
    /// Hz
    pub frequency: f64,
    /// Periods integrated after one settling period.
    pub periods: usize,
    pub steps_per_period: usize,
}

impl Default for AcProbe {
    fn default() -> Self {
        Self {
            amplitude: 10e-3,
            frequency: 1e6,
            periods: 2,
            steps_per_period: 64,
        }
    }
}

/// Converts F/cm² to fF/µm².
pub const F_PER_CM2_TO_FF_PER_UM2: f64 = 1e7;

/// AC capacitance (F/cm²) seen by a sinusoidal probe around the simulator's present bias.
///
/// The probe runs on a copy, so `sim` is left untouched. The terminal charge
/// is projected onto the drive over whole periods, which rejects the
/// in-phase leakage contribution.
pub fn small_signal_capacitance(
    sim: &crate::transient::Simulator,
    probe: &AcProbe,
) -> Result<f64, crate::error::SolverError> {
    let mut s = sim.clone();
    let v_dc = s.v;
    let n = probe.steps_per_period.max(8);
    let dt = 1.0 / (probe.frequency * n as f64);
    let w = 2.0 * std::f64::consts::PI * probe.frequency;
    let mut k = 0usize;
    let mut next = |s: &mut crate::transient::Simulator| -> Result<(f64, f64, f64), crate::error::SolverError> {
        k += 1;
        let t = k as f64 * dt;
        let sn = (w * t).sin();
        s.step_fixed(v_dc + probe.amplitude * sn, dt)?;
        Ok((s.q_terminal, sn, t))
    };
    for _ in 0..n {
        next(&mut s)?;
    }
    let q_start = s.q_terminal;
    let t_start = n as f64 * dt;
    let (mut acc, mut norm, mut ts) = (0.0, 0.0, 0.0);
    let (mut q_end, mut t_end) = (q_start, t_start);
    for _ in 0..n * probe.periods.max(1) {
        let (q, sn, t) = next(&mut s)?;
        acc += q * sn;
        norm += sn * sn;
        ts += (t - t_start) * sn;
        q_end = q;
        t_end = t;
    }
    // remove a slow leakage drift, estimated between period boundaries
    let drift = (q_end - q_start) / (t_end - t_start);
    Ok((acc - drift * ts) / (norm * probe.amplitude) * F_PER_M2_TO_F_PER_CM2)
}

/// Static dQ/dV (F/cm²) at bias `v` with `p` and the boundary charge frozen.
pub fn frozen_capacitance(v: f64, p: f64, q_dyn: f64, params: &ModelParams) -> f64 {
    let dev = crate::transient::Device::new(params, Default::default());
    frozen_capacitance_with(&dev, v, p, q_dyn)
}

pub(crate) fn frozen_capacitance_with(dev: &crate::transient::Device, v: f64, p: f64, q_dyn: f64) -> f64 {
    let h = 1e-4;
    let (_, _, a) = dev.solve_static(v + h, p, q_dyn);
    let (_, _, b) = dev.solve_static(v - h, p, q_dyn);
    dev.c_int() * (a - b) / (2.0 * h) * F_PER_M2_TO_F_PER_CM2
}
