//! Closed-form device equations against independent reference evaluators.

mod common;

use common::*;
use nvcap::electrostatics::{c_depl_polar, c_depl_total, Polarity};
use nvcap::leakage::{capture_rate, tat_current_density, x_tm, x_tm_with_clamp, TatLayerParams};
use nvcap::ModelParams;

#[test]
fn tat_matches_reference_on_random_inputs() {
    let mut r = rng(11);
    let mut worst = 0.0f64;
    let mut compared = 0;
    for _ in 0..1000 {
        let p = random_tat(&mut r);
        let v = random_bias(&mut r);
        let reference = oracle_tat(v, &p);
        let model = tat_current_density(v, &p).unwrap();
        if reference == 0.0 || !reference.is_normal() {
            // both underflow together
            assert!(model.abs() < 1e-300, "v={v} p={p:?} model {model}");
            continue;
        }
        worst = worst.max(rel_err(model, reference));
        compared += 1;
    }
    assert!(compared > 500);
    assert!(worst < 1e-12, "worst relative error {worst:e}");
}

#[test]
fn x_tm_matches_reference_and_stays_in_film() {
    let mut r = rng(12);
    for _ in 0..1000 {
        let p = random_tat(&mut r);
        let v = random_bias(&mut r);
        let x = x_tm(v, &p).unwrap() / 1e-9;
        assert!(x >= 0.0 && x <= p.thickness * (1.0 + 1e-12));
        let reference = oracle_x_tm_nm(v, &p);
        assert!((x - reference).abs() <= 1e-12 * p.thickness, "{x} vs {reference}");
    }
}

#[test]
fn x_tm_clamp_flag_reports_out_of_film_solutions() {
    let mut r = rng(13);
    let mut clamped = 0;
    for _ in 0..2000 {
        let p = random_tat(&mut r);
        let v = random_bias(&mut r);
        let (x, flag) = x_tm_with_clamp(v, &p).unwrap();
        let x_nm = x / 1e-9;
        if flag {
            clamped += 1;
            assert!(x_nm == 0.0 || rel_err(x_nm, p.thickness) < 1e-14);
        }
    }
    assert!(clamped > 0, "random inputs should exercise the clamp");
}

#[test]
fn x_tm_brute_force_on_a_dense_grid() {
    // Evaluate the formula on a dense bias grid and compare each point with
    // the model, including values near the small-bias threshold.
    let p = TatLayerParams::ferroelectric(&ModelParams::nominal());
    for i in 1..=4000 {
        let v = i as f64 * 1e-3;
        for s in [v, -v] {
            let x = x_tm(s, &p).unwrap() / 1e-9;
            assert!((x - oracle_x_tm_nm(s, &p)).abs() <= 1e-12 * p.thickness);
        }
    }
}

#[test]
fn current_is_linear_in_trap_density_to_machine_precision() {
    let mut r = rng(14);
    for _ in 0..200 {
        let p = random_tat(&mut r);
        let v = random_bias(&mut r);
        let j = tat_current_density(v, &p).unwrap();
        for k in [0.5, 3.0, 10.0, 1e3] {
            let mut q = p;
            q.n_tr *= k;
            let jk = tat_current_density(v, &q).unwrap();
            assert!(rel_err(jk, k * j) <= 2.0 * f64::EPSILON, "k={k}: {jk} vs {}", k * j);
        }
    }
}

#[test]
fn capture_rate_is_independent_of_trap_density() {
    let mut p = TatLayerParams::interface(&ModelParams::nominal());
    let a = capture_rate(1.0, &p).unwrap();
    p.n_tr *= 50.0;
    assert_eq!(capture_rate(1.0, &p).unwrap(), a);
}

#[test]
fn depletion_matches_reference_on_random_inputs() {
    let mut r = rng(21);
    let mut worst = 0.0f64;
    let mut compared = 0;
    while compared < 1000 {
        let p = random_device(&mut r);
        let e: f64 = rand::Rng::random_range(&mut r, -5e8..5e8);
        let pf: f64 = rand::Rng::random_range(&mut r, 0.0..1.0);
        let (od, ou) = oracle_c_depl(e, &p);
        let down = c_depl_polar(e, Polarity::Down, &p);
        let up = c_depl_polar(e, Polarity::Up, &p);
        let (Ok(d), Ok(u)) = (down, up) else {
            // near-singular draw, rejected by the model's floor
            continue;
        };
        worst = worst.max(rel_err(d, od)).max(rel_err(u, ou));
        worst = worst.max(rel_err(
            c_depl_total(pf, e, &p).unwrap(),
            oracle_c_depl_total(pf, e, &p),
        ));
        compared += 1;
    }
    assert!(worst < 1e-12, "worst relative error {worst:e}");
}

#[test]
fn depletion_polarities_have_opposite_field_dependence() {
    let p = ModelParams::nominal();
    let c = |e: f64, pol| c_depl_polar(e, pol, &p).unwrap();
    // Away from the poles, one capacitance rises with field where the other falls.
    let (e1, e2) = (-1e8, 1e8);
    let dd = c(e2, Polarity::Down) - c(e1, Polarity::Down);
    let du = c(e2, Polarity::Up) - c(e1, Polarity::Up);
    assert!(dd * du < 0.0, "dd {dd:e} du {du:e}");
}

#[test]
fn depletion_total_interpolates_polarities() {
    let p = ModelParams::nominal();
    let e = 3e7;
    let d = c_depl_total(1.0, e, &p).unwrap();
    let u = c_depl_total(0.0, e, &p).unwrap();
    assert_eq!(d, c_depl_polar(e, Polarity::Down, &p).unwrap());
    assert_eq!(u, c_depl_polar(e, Polarity::Up, &p).unwrap());
    let half = c_depl_total(0.5, e, &p).unwrap();
    assert!(rel_err(half, 0.5 * (d + u)) < 1e-15);
}

#[test]
fn depletion_pole_is_reported_not_divided() {
    let p = ModelParams::nominal();
    // Down-state pole where the displacement cancels the uncompensated charge.
    let ps = p.p_s * 1e-2 - 1.602_176_634e-19 * p.n_tr_depl_down * 1e4;
    let e_pole = ps / (8.854_187_812_8e-12 * p.eps_fe);
    assert!(c_depl_polar(e_pole, Polarity::Down, &p).is_err());
}
