//! Backward-Euler network solver: circuit identities, convergence order,
//! adaptive stepping and determinism.

use nvcap::transient::engine::{Branches, Device, SolverConfig};
use nvcap::transient::simulator::run;
use nvcap::transient::waveform::Waveform;
use nvcap::transient::Simulator;
use nvcap::{DeviceState, ModelParams, SolverError};

const EPS0: f64 = 8.854_187_812_8e-12;

fn caps(p: &ModelParams) -> (f64, f64) {
    let mix = p.alpha_fe * p.eps_fe + (1.0 - p.alpha_fe) * p.eps_de;
    (EPS0 * mix / (p.t_fe * 1e-9), EPS0 * p.eps_int / (p.t_int * 1e-9))
}

fn cfg_with(branches: Branches) -> SolverConfig {
    SolverConfig {
        branches,
        ..SolverConfig::default()
    }
}

#[test]
fn linear_network_is_a_capacitive_divider() {
    let p = ModelParams::nominal();
    let cfg = cfg_with(Branches::linear_only());
    let dev = Device::new(&p, cfg.branches);
    let (c_fe, c_int) = caps(&p);
    assert!((dev.c_fe() / c_fe - 1.0).abs() < 1e-14);
    for v in [-3.0, -0.5, 0.1, 2.0] {
        let out = dev.step(&DeviceState::default(), v, 1e-9, &cfg).unwrap();
        let s = out.state;
        let expected = v * c_int / (c_fe + c_int);
        assert!((s.v_fe - expected).abs() < 1e-9 * v.abs(), "{} vs {expected}", s.v_fe);
        assert_eq!(s.v_depl, 0.0);
        assert!((s.v_fe + s.v_int - v).abs() < 1e-12);
        // series capacitors carry the same charge
        assert!((c_fe * s.v_fe - c_int * s.v_int).abs() < 1e-9 * c_int * v.abs());
        // terminal charge equals the series capacitance times the step
        let c_series = c_fe * c_int / (c_fe + c_int);
        assert!((out.dq_terminal / (c_series * v) - 1.0).abs() < 1e-8);
    }
}

#[test]
fn relaxed_state_is_a_fixed_point_without_switching_or_leakage() {
    let p = ModelParams::nominal();
    let branches = Branches {
        leakage: false,
        switching: false,
        depletion: true,
    };
    let cfg = cfg_with(branches);
    let mut sim = Simulator::new(&p, cfg, DeviceState::with_polarization(0.8)).unwrap();
    sim.ramp(0.7, 1e-6, "ramp", &mut |_| {}).unwrap();
    let before = sim.state;
    sim.hold(1e-3, "hold", &mut |_| {}).unwrap();
    let after = sim.state;
    assert!((after.v_fe - before.v_fe).abs() < 1e-12);
    assert!((after.v_depl - before.v_depl).abs() < 1e-12);
    assert_eq!(after.p, before.p);
}

/// Every accepted step of a full drive satisfies KVL and the node charge balance.
#[test]
fn accepted_steps_satisfy_kvl_and_charge_balance() {
    let p = ModelParams::nominal();
    let cfg = SolverConfig::default();
    let (c_fe, c_int) = caps(&p);
    let p_sw = p.alpha_fe * p.p_s * 1e-2;
    let wf = Waveform::builder(0.0)
        .ramp_to(3.0, 20e-6, "up")
        .hold(10e-6, "top")
        .ramp_to(-3.0, 40e-6, "down")
        .ramp_to(0.0, 20e-6, "back")
        .build();
    let tr = run(&wf, &DeviceState::default(), &p, &cfg).unwrap();
    assert!(tr.len() > 50);
    let area = p.area * 1e-12;
    let mut q_int = 0.0;
    for i in 0..tr.len() {
        let kvl = tr.v_fe[i] + tr.v_int[i] + tr.v_depl[i] - tr.v_applied[i];
        assert!(kvl.abs() < 1e-12, "step {i}: KVL residual {kvl:e}");
        let node = c_int * tr.v_int[i] - (c_fe * tr.v_fe[i] + p_sw * (2.0 * tr.p[i] - 1.0) + tr.q_trap_dyn[i]);
        assert!(
            node.abs() < cfg.abs_tol * c_int * 10.0,
            "step {i}: node residual {node:e} C/m2"
        );
        if i > 0 {
            let dt = tr.t[i] - tr.t[i - 1];
            q_int += dt * tr.i_leak_int[i] / area;
            // terminal charge = interface capacitor charge change + interface conduction
            let expected = c_int * (tr.v_int[i] - tr.v_int[0]) + q_int;
            assert!(
                (tr.q_terminal[i] - expected).abs() < 1e-9 * (1.0 + expected.abs()),
                "step {i}: charge continuity {} vs {expected}",
                tr.q_terminal[i]
            );
            // boundary charge integrates the leakage mismatch
            let dq = tr.q_trap_dyn[i] - tr.q_trap_dyn[i - 1];
            let dj = dt * (tr.i_leak_fe[i] - tr.i_leak_int[i]) / area;
            assert!((dq - dj).abs() <= 1e-12 * (1.0 + dq.abs()));
        }
        assert!((0.0..=1.0).contains(&tr.p[i]));
    }
}

#[test]
fn backward_euler_is_first_order() {
    let p = ModelParams::nominal();
    let branches = Branches {
        leakage: false,
        switching: true,
        depletion: false,
    };
    let cfg = cfg_with(branches);
    let total = 2e-6;
    let final_p = |n: usize| {
        let mut sim = Simulator::new(&p, cfg, DeviceState::with_polarization(0.05)).unwrap();
        sim.step_fixed(2.2, 1e-12).unwrap();
        let dt = total / n as f64;
        for _ in 0..n {
            sim.step_fixed(2.2, dt).unwrap();
        }
        sim.state.p
    };
    let (a, b, c) = (final_p(200), final_p(400), final_p(800));
    assert!(a > 0.1 && a < 0.95, "choose a partially switched end point, got {a}");
    let ratio = (a - b) / (b - c);
    assert!((ratio - 2.0).abs() < 0.15, "error ratio {ratio}");
}

#[test]
fn adaptive_solution_converges_with_tolerance() {
    let p = ModelParams::nominal();
    let wf = Waveform::triangle(3.0, 1e-3, 1);
    let end = |f: f64| {
        let tr = run(&wf, &DeviceState::default(), &p, &SolverConfig::default().scaled(f)).unwrap();
        *tr.p.last().unwrap()
    };
    let (loose, mid, tight) = (end(1.0), end(0.1), end(0.01));
    assert!((mid - tight).abs() <= (loose - tight).abs() + 1e-9);
    assert!((loose - tight).abs() < 5e-3, "{loose} vs {tight}");
}

#[test]
fn runs_are_bitwise_deterministic() {
    let p = ModelParams::nominal();
    let wf = Waveform::triangle(3.0, 1e-3, 2);
    let a = run(&wf, &DeviceState::default(), &p, &SolverConfig::default()).unwrap();
    let b = run(&wf, &DeviceState::default(), &p, &SolverConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn invalid_inputs_are_reported() {
    let p = ModelParams::nominal();
    let bad = SolverConfig {
        dt_min: 1.0,
        dt_max: 1e-3,
        ..SolverConfig::default()
    };
    assert!(Simulator::new(&p, bad, DeviceState::default()).is_err());
    let mut sim = Simulator::new(&p, SolverConfig::default(), DeviceState::default()).unwrap();
    assert!(matches!(
        sim.ramp(1.0, 0.0, "zero", &mut |_| {}),
        Err(SolverError::Waveform(_))
    ));
    let wf = Waveform::builder(1.0).hold(1e-6, "h").build();
    assert!(run(&wf, &DeviceState::default(), &p, &SolverConfig::default()).is_err());
}

#[test]
fn step_too_small_names_segment_and_state() {
    let p = ModelParams::nominal();
    let cfg = SolverConfig {
        max_newton: 1,
        abs_tol: 1e-30,
        dt_min: 1e-12,
        ..SolverConfig::default()
    };
    let mut sim = Simulator::new(&p, cfg, DeviceState::default()).unwrap();
    match sim.ramp(3.0, 1e-6, "stress", &mut |_| {}) {
        Err(SolverError::StepTooSmall { segment, state, .. }) => {
            assert_eq!(segment, "stress");
            assert!(state.contains("v_applied"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn strong_positive_pulse_switches_down_and_negative_switches_up() {
    let p = ModelParams::nominal();
    let cfg = SolverConfig::default();
    let mut sim = Simulator::new(&p, cfg, DeviceState::default()).unwrap();
    sim.run_waveform(&Waveform::pulse(4.0, 1e-4, 1e-6), &mut |_| {})
        .unwrap();
    assert!(sim.state.p > 0.95, "{}", sim.state.p);
    sim.run_waveform(&Waveform::pulse(-4.0, 1e-4, 1e-6), &mut |_| {})
        .unwrap();
    assert!(sim.state.p < 0.05, "{}", sim.state.p);
    assert!(sim.stats.accepted > 0);
}
