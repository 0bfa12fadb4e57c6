//! Phenomenological polarization dynamics.
//!
//! A single Merz-law rate `1/τ(E) = exp(-(E_a/|E|)^β)/τ₀` relaxes the
//! down-domain fraction `p` towards a logistic equilibrium centered on the
//! coercive field of the driving polarity. Relaxation only proceeds in the
//! direction of the field, so the law is hysteretic: a positive field can
//! only increase `p`, a negative field can only decrease it, and zero field
//! leaves the state untouched.

use crate::constants::UC_PER_CM2;
use crate::params::ModelParams;

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Inverse Merz switching time at field `e_fe` (V/m), 1/s.
pub fn inverse_switching_time(e_fe: f64, params: &ModelParams) -> f64 {
    let sw = &params.switching;
    if e_fe == 0.0 {
        return 0.0;
    }
    (-(sw.e_a / e_fe.abs()).powf(sw.beta)).exp() / sw.tau_0
}

/// Equilibrium down fraction reached under a sustained field `e_fe`.
pub fn equilibrium_fraction(e_fe: f64, params: &ModelParams) -> f64 {
    let sw = &params.switching;
    let t = params.t_fe_si();
    let e_c = if e_fe >= 0.0 { sw.v_c_pos / t } else { sw.v_c_neg / t };
    let width = sw.lorentz_width * e_c.abs();
    logistic((e_fe - e_c) / width)
}

/// dp/dt for field `e_fe` (V/m) at down fraction `p`, 1/s.
pub fn switching_rate(e_fe: f64, p: f64, params: &ModelParams) -> f64 {
    if e_fe == 0.0 {
        return 0.0;
    }
    let k = inverse_switching_time(e_fe, params);
    if k == 0.0 {
        return 0.0;
    }
    let target = equilibrium_fraction(e_fe, params);
    if e_fe > 0.0 {
        (target - p).max(0.0) * k
    } else {
        (target - p).min(0.0) * k
    }
}

/// Switching current density `2·P_s·α_fe·dp/dt`, A/cm².
pub fn polarization_current_density(dp_dt: f64, params: &ModelParams) -> f64 {
    2.0 * params.p_s * UC_PER_CM2 * 1e-4 * params.alpha_fe * dp_dt
}
