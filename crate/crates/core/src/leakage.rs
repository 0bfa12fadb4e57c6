//! Trap-assisted tunneling (TAT) leakage through a single insulating layer.
//!
//! Single-tunnel-event approximation: the current density is set by the
//! capture time constant of traps located at the position `x_tm` where the
//! tunneling current peaks, and is linear in the trap density.
//!
//! Symbol mapping for the closed form of `x_tm`: the charge `Q` and the
//! constant `P_Q` are the elementary charge and the bare `λ` is `λ_c`.
//! The expression is evaluated in nm / eV / V with charges in units of e,
//! which is the only unit system in which its terms are commensurate.
//! The tunneling attenuation enters the capture rate as `exp(-λ_c·x_tm)`
//! (λ_c is an inverse length).
//!
//! Negative bias uses the same expression on `|v|` with the sign restored,
//! and `|v| < 1 mV` is linearly interpolated through `J(0) = 0`.

use crate::constants::{HBAR, K_B, M_E, NM, Q};
use crate::error::ModelError;
use crate::params::ModelParams;

/// Bias below which the current is linearly interpolated through zero, V.
pub const SMALL_BIAS: f64 = 1e-3;

/// TAT parameters of one layer, in device units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TatLayerParams {
    /// Layer thickness, nm.
    pub thickness: f64,
    /// Cathode-to-insulator conduction band offset, eV.
    pub phi_b: f64,
    /// Bulk trap density, cm⁻³.
    pub n_tr: f64,
    /// Effective mass, fraction of m_e.
    pub m_star: f64,
    /// Thermal ionization energy, eV.
    pub e_tr_t: f64,
    /// Relaxation energy, eV.
    pub e_tr_rel: f64,
    /// Characteristic tunneling length, nm.
    pub x_c: f64,
    /// c₀N_c prefactor, s⁻¹.
    pub c0nc: f64,
    /// K.
    pub temperature: f64,
}

impl TatLayerParams {
    pub fn ferroelectric(p: &ModelParams) -> Self {
        Self {
            thickness: p.t_fe,
            phi_b: p.phi_b_fe,
            n_tr: p.n_tr_fe,
            m_star: p.m_star_fe,
            e_tr_t: p.w_tr_t,
            e_tr_rel: p.w_tr_rel,
            x_c: p.x_c,
            c0nc: p.c0nc,
            temperature: p.temperature,
        }
    }

    pub fn interface(p: &ModelParams) -> Self {
        Self {
            thickness: p.t_int,
            phi_b: p.phi_b_int,
            n_tr: p.n_tr_int,
            m_star: p.m_star_int,
            e_tr_t: p.w_tr_t_int,
            e_tr_rel: p.w_tr_rel_int,
            x_c: p.x_c,
            c0nc: p.c0nc_int,
            temperature: p.temperature,
        }
    }

    fn check(&self) -> Result<(), ModelError> {
        let positive = [
            ("thickness", self.thickness),
            ("phi_b", self.phi_b),
            ("m_star", self.m_star),
            ("e_tr_t", self.e_tr_t),
            ("e_tr_rel", self.e_tr_rel),
            ("x_c", self.x_c),
            ("c0nc", self.c0nc),
            ("temperature", self.temperature),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(ModelError::Domain(format!("{name} = {v} must be > 0")));
            }
        }
        if !(self.n_tr >= 0.0) {
            return Err(ModelError::Domain(format!("n_tr = {} must be >= 0", self.n_tr)));
        }
        Ok(())
    }
}

/// Characteristic tunneling constant `2·sqrt(2 m* q φ_b)/ħ`, 1/m.
pub fn lambda_c(p: &TatLayerParams) -> Result<f64, ModelError> {
    if !(p.phi_b > 0.0) {
        return Err(ModelError::Domain(format!("phi_b = {} must be > 0", p.phi_b)));
    }
    if !(p.m_star > 0.0) {
        return Err(ModelError::Domain(format!("m_star = {} must be > 0", p.m_star)));
    }
    Ok(2.0 * (p.phi_b * 2.0 * p.m_star * M_E * Q).sqrt() / HBAR)
}

/// Unclamped closed-form trap position of maximal tunneling current, nm.
fn x_tm_raw_nm(v: f64, p: &TatLayerParams, lambda_per_nm: f64) -> f64 {
    let v = v.abs();
    let t = p.thickness;
    let kt = K_B * p.temperature;
    let vt = kt;
    let a = 2.0 * p.e_tr_rel * t * kt;
    let b = lambda_per_nm * t / p.e_tr_rel + lambda_per_nm * lambda_per_nm / (4.0 * vt);
    let c = lambda_per_nm * t * (p.e_tr_t - p.e_tr_rel - p.phi_b) / p.e_tr_rel;
    let d = lambda_per_nm * t * (p.phi_b - p.e_tr_t + p.e_tr_rel);
    let radicand = (b * v * v / vt + c * v / vt + 4.0 * t * t).max(0.0);
    a * (radicand.sqrt() - 2.0 * a * t + d * v) / (lambda_per_nm * v * v)
}

/// Trap position of maximal tunneling current, m, together with whether
/// the closed form fell outside the film and was clamped.
pub fn x_tm_with_clamp(v: f64, p: &TatLayerParams) -> Result<(f64, bool), ModelError> {
    p.check()?;
    if v == 0.0 {
        return Err(ModelError::Singular("x_tm is undefined at v = 0".into()));
    }
    let lambda = lambda_c(p)? * NM;
    let raw = x_tm_raw_nm(v, p, lambda);
    let clamped = raw.clamp(0.0, p.thickness);
    Ok((clamped * NM, clamped != raw))
}

/// Trap position of maximal tunneling current, clamped to the film, m.
pub fn x_tm(v: f64, p: &TatLayerParams) -> Result<f64, ModelError> {
    x_tm_with_clamp(v, p).map(|(x, _)| x)
}

/// Capture rate τ_c⁻¹ of a trap at depth `x` (m) for bias `v`, 1/s.
pub fn capture_rate_at(x: f64, v: f64, p: &TatLayerParams) -> Result<f64, ModelError> {
    p.check()?;
    let lambda = lambda_c(p)?;
    let kt = K_B * p.temperature;
    let delta_e = p.e_tr_t + v.abs() * x / (p.thickness * NM) - p.phi_b;
    let e_c = (p.e_tr_rel - delta_e).powi(2) / (4.0 * p.e_tr_rel);
    Ok(p.c0nc * (-lambda * x).exp() * (-e_c / kt).exp())
}

/// Capture rate at the trap position `x_tm(v)`, 1/s.
pub fn capture_rate(v: f64, p: &TatLayerParams) -> Result<f64, ModelError> {
    let x = x_tm(v, p)?;
    capture_rate_at(x, v, p)
}

fn current_density_unchecked(v: f64, p: &TatLayerParams) -> Result<f64, ModelError> {
    let rate = capture_rate(v, p)?;
    let x_c_cm = p.x_c * 1e-7;
    Ok(v.signum() * Q * p.n_tr * x_c_cm * rate / 2.0)
}

/// TAT current density, A/cm², signed with `v`.
pub fn tat_current_density(v: f64, p: &TatLayerParams) -> Result<f64, ModelError> {
    if v.abs() < SMALL_BIAS {
        let j1 = current_density_unchecked(SMALL_BIAS, p)?;
        return Ok(j1 * v / SMALL_BIAS);
    }
    current_density_unchecked(v, p)
}

/// One row of a leakage sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakagePoint {
    pub v: f64,
    /// A/cm².
    pub j_fe: f64,
    /// A/cm².
    pub j_int: f64,
    /// nm.
    pub x_tm: f64,
    /// 1/s.
    pub tau_c_inv: f64,
}

/// Evaluates both layers over the given bias list; the columns `x_tm` and
/// `tau_c_inv` refer to the ferroelectric layer.
pub fn leakage_sweep(params: &ModelParams, voltages: &[f64]) -> Result<Vec<LeakagePoint>, ModelError> {
    let fe = TatLayerParams::ferroelectric(params);
    let int = TatLayerParams::interface(params);
    voltages
        .iter()
        .map(|&v| {
            let probe = if v.abs() < SMALL_BIAS {
                SMALL_BIAS.copysign(v)
            } else {
                v
            };
            let probe = if probe == 0.0 { SMALL_BIAS } else { probe };
            Ok(LeakagePoint {
                v,
                j_fe: tat_current_density(v, &fe)?,
                j_int: tat_current_density(v, &int)?,
                x_tm: x_tm(probe, &fe)? / NM,
                tau_c_inv: capture_rate(probe, &fe)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fe() -> TatLayerParams {
        TatLayerParams::ferroelectric(&ModelParams::nominal())
    }

    #[test]
    fn lambda_vanishes_at_zero_barrier() {
        let mut p = fe();
        p.phi_b = 1e-30;
        assert!(lambda_c(&p).unwrap() < 1e-3);
        p.phi_b = 0.0;
        assert!(matches!(lambda_c(&p), Err(ModelError::Domain(_))));
        p.phi_b = -1.0;
        assert!(lambda_c(&p).is_err());
    }

    #[test]
    fn lambda_sqrt_scaling() {
        let mut p = fe();
        let l1 = lambda_c(&p).unwrap();
        p.phi_b *= 4.0;
        let l4 = lambda_c(&p).unwrap();
        assert!((l4 / l1 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lambda_monotone_in_barrier_and_mass() {
        let mut p = fe();
        let mut last = 0.0;
        for i in 1..20 {
            p.phi_b = 0.2 * i as f64;
            let l = lambda_c(&p).unwrap();
            assert!(l > last);
            last = l;
        }
        let mut p = fe();
        last = 0.0;
        for i in 1..20 {
            p.m_star = 0.05 * i as f64;
            let l = lambda_c(&p).unwrap();
            assert!(l > last);
            last = l;
        }
    }

    #[test]
    fn x_tm_singular_at_zero() {
        assert!(matches!(x_tm(0.0, &fe()), Err(ModelError::Singular(_))));
    }

    #[test]
    fn zero_activation_barrier() {
        let p = fe();
        let v = 2.0;
        // depth where ΔE equals the relaxation energy
        let x = (p.e_tr_rel - p.e_tr_t + p.phi_b) * p.thickness / v * NM;
        let r = capture_rate_at(x, v, &p).unwrap();
        let expected = p.c0nc * (-lambda_c(&p).unwrap() * x).exp();
        assert!((r / expected - 1.0).abs() < 1e-14);
    }

    #[test]
    fn arrhenius_in_temperature() {
        let mut p = fe();
        let x = 3.0 * NM;
        let mut last = 0.0;
        for t in [200.0, 250.0, 300.0, 350.0, 400.0] {
            p.temperature = t;
            let r = capture_rate_at(x, 0.5, &p).unwrap();
            assert!(r > last);
            last = r;
        }
    }

    #[test]
    fn zero_traps_zero_current() {
        let mut p = fe();
        p.n_tr = 0.0;
        for v in [-2.0, -0.5, 0.0, 1e-4, 0.3, 3.0] {
            assert_eq!(tat_current_density(v, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn doubling_traps_doubles_current() {
        let p = TatLayerParams::interface(&ModelParams::nominal());
        let mut p2 = p;
        p2.n_tr *= 2.0;
        for v in [-3.0, -0.4, -5e-4, 0.0, 2e-4, 0.2, 1.0, 2.5] {
            let j = tat_current_density(v, &p).unwrap();
            assert_eq!(tat_current_density(v, &p2).unwrap(), 2.0 * j);
        }
    }

    #[test]
    fn sign_follows_bias_and_zero_at_zero() {
        let p = TatLayerParams::interface(&ModelParams::nominal());
        assert_eq!(tat_current_density(0.0, &p).unwrap(), 0.0);
        for v in [-3.0, -1.0, -1e-4, 1e-4, 0.7, 3.0] {
            let j = tat_current_density(v, &p).unwrap();
            assert_eq!(j.signum(), v.signum());
            assert_eq!(tat_current_density(-v, &p).unwrap(), -j);
        }
    }

    #[test]
    fn small_bias_interpolation_is_continuous() {
        let p = TatLayerParams::interface(&ModelParams::nominal());
        let inside = tat_current_density(SMALL_BIAS * (1.0 - 1e-12), &p).unwrap();
        let outside = tat_current_density(SMALL_BIAS, &p).unwrap();
        assert!((inside / outside - 1.0).abs() < 1e-9);
    }
}
