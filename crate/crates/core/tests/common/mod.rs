//! Straight-line reference evaluators written directly from the printed
//! equations, plus random physical inputs for them.

#![allow(dead_code)]

use nvcap::leakage::TatLayerParams;
use nvcap::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const Q: f64 = 1.602_176_634e-19;
const KB_EV: f64 = 8.617_333_262e-5;
const HBAR: f64 = 1.054_571_817e-34;
const ME: f64 = 9.109_383_701_5e-31;
const EPS0: f64 = 8.854_187_812_8e-12;

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Trap position of maximal current in nm, clamped to the film.
pub fn oracle_x_tm_nm(v: f64, p: &TatLayerParams) -> f64 {
    let lambda_per_m = 2.0 * (p.phi_b * 2.0 * p.m_star * ME * Q).sqrt() / HBAR;
    let lam = lambda_per_m * 1e-9;
    let t = p.thickness;
    let kt = KB_EV * p.temperature;
    let vt = kt;
    let vv = v.abs();
    let a = 2.0 * p.e_tr_rel * t * kt;
    let b = lam * t / p.e_tr_rel + lam * lam / (4.0 * vt);
    let c = lam * t * (p.e_tr_t - p.e_tr_rel - p.phi_b) / p.e_tr_rel;
    let d = lam * t * (p.phi_b - p.e_tr_t + p.e_tr_rel);
    let mut rad = b * vv * vv / vt + c * vv / vt + 4.0 * t * t;
    if rad < 0.0 {
        rad = 0.0;
    }
    let x = a * (rad.sqrt() - 2.0 * a * t + d * vv) / (lam * vv * vv);
    x.clamp(0.0, t)
}

/// TAT current density in A/cm² for |v| ≥ 1 mV.
pub fn oracle_tat(v: f64, p: &TatLayerParams) -> f64 {
    let lambda_per_m = 2.0 * (p.phi_b * 2.0 * p.m_star * ME * Q).sqrt() / HBAR;
    let kt = KB_EV * p.temperature;
    let x_nm = oracle_x_tm_nm(v, p);
    let delta_e = p.e_tr_t + v.abs() * x_nm / p.thickness - p.phi_b;
    let e_c = (p.e_tr_rel - delta_e) * (p.e_tr_rel - delta_e) / (4.0 * p.e_tr_rel);
    let rate = p.c0nc * (-lambda_per_m * x_nm * 1e-9).exp() * (-e_c / kt).exp();
    let sign = if v < 0.0 { -1.0 } else { 1.0 };
    sign * Q * p.n_tr * (p.x_c * 1e-7) * rate / 2.0
}

/// Depletion capacitance of each polarity in F/cm², for FE field `e` (V/m).
/// The field is measured along the up direction's opposite, so the
/// displacement term enters with a minus sign.
pub fn oracle_c_depl(e: f64, p: &ModelParams) -> (f64, f64) {
    let num = p.eps_depl * EPS0 * Q * (p.n_depl * 1e6);
    let ps = p.p_s * 1e-2;
    let disp = EPS0 * p.eps_fe * e;
    let down = num / (-disp + (ps - Q * p.n_tr_depl_down * 1e4)).abs();
    let up = num / (-disp - (ps - Q * p.n_tr_depl_up * 1e4)).abs();
    (down * 1e-4, up * 1e-4)
}

pub fn oracle_c_depl_total(pfrac: f64, e: f64, p: &ModelParams) -> f64 {
    let (d, u) = oracle_c_depl(e, p);
    pfrac * d + (1.0 - pfrac) * u
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Random single-layer TAT inputs inside physically plausible ranges.
pub fn random_tat(rng: &mut ChaCha8Rng) -> TatLayerParams {
    TatLayerParams {
        thickness: rng.random_range(1.0..20.0),
        phi_b: rng.random_range(1.0..3.5),
        n_tr: log_uniform(rng, 1e16, 1e21),
        m_star: rng.random_range(0.1..1.0),
        e_tr_t: rng.random_range(1.0..3.0),
        e_tr_rel: rng.random_range(0.5..2.0),
        x_c: rng.random_range(0.5..10.0),
        c0nc: log_uniform(rng, 1e-10, 1e16),
        temperature: rng.random_range(250.0..400.0),
    }
}

pub fn random_bias(rng: &mut ChaCha8Rng) -> f64 {
    let mag = rng.random_range(0.01..4.0);
    if rng.random_bool(0.5) {
        mag
    } else {
        -mag
    }
}

/// Random device for the depletion capacitance.
pub fn random_device(rng: &mut ChaCha8Rng) -> ModelParams {
    let mut p = ModelParams::nominal();
    p.eps_fe = rng.random_range(15.0..60.0);
    p.eps_depl = rng.random_range(1.0..10.0);
    p.p_s = rng.random_range(10.0..40.0);
    p.n_depl = log_uniform(rng, 1e20, 1e23);
    p.n_tr_depl_down = rng.random_range(0.0..1.0e14);
    p.n_tr_depl_up = rng.random_range(0.0..1.0e14);
    p
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
