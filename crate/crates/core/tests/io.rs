use std::path::Path;

use nvcap::calibration::{synth, Layer};
use nvcap::io::config::{emit_config, emit_params, parse_config, parse_str, Config, ConfigErrorKind};
use nvcap::io::data::{dataset_from_table, dataset_table, defect_rows, load_datasets, write_datasets};
use nvcap::io::manifest::{sha256_hex, RunManifest, MANIFEST_FILE};
use nvcap::io::plot::{emit_plot_script, FigureKind};
use nvcap::io::table::{read_trace, write_trace, Column, Table};
use nvcap::params::PARAM_SPECS;
use nvcap::transient::trace::{TraceSet, TRACE_COLUMNS};
use nvcap::{Error, ModelParams};
use proptest::prelude::*;

fn shipped() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../params/nominal.params")
}

fn config_error(text: &str) -> nvcap::io::config::ConfigError {
    match parse_str(text, "t.params") {
        Err(Error::Config(e)) => e,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn shipped_file_reproduces_the_nominal_parameters_exactly() {
    let cfg = parse_config(&shipped()).unwrap();
    let expected = ModelParams::nominal_with_variability();
    assert_eq!(cfg.params, expected);
    // spot values from the parameter table
    assert_eq!(cfg.params.n_depl, 1.2e22);
    assert_eq!(cfg.params.n_tr_fe, 1.5e19);
    assert_eq!(cfg.params.n_tr_int, 1e19);
    assert_eq!(cfg.params.n_tr_depl_down, 7.5e13);
    assert_eq!(cfg.params.n_tr_depl_up, 0.0);
    assert_eq!(cfg.params.variability.get("n_depl"), Some(&3.9e20));
}

#[test]
fn unknown_key_names_the_key_and_nearest_valid_key() {
    let e = config_error("[device]\n\n  n_dpl = 1e22 cm-3\n");
    assert_eq!((e.line, e.column), (3, 3));
    match &e.kind {
        ConfigErrorKind::UnknownKey { key, suggestion, .. } => {
            assert_eq!(key, "n_dpl");
            assert_eq!(suggestion.as_deref(), Some("n_depl"));
        }
        k => panic!("{k:?}"),
    }
    let msg = e.to_string();
    assert!(
        msg.contains("n_dpl") && msg.contains("n_depl") && msg.starts_with("t.params:3:3"),
        "{msg}"
    );

    let e = config_error("[read]\nc_b1 = 10 fF\n");
    assert!(matches!(&e.kind, ConfigErrorKind::UnknownKey { suggestion: Some(s), .. } if s == "c_bl"));
}

#[test]
fn unit_mismatch_is_a_unit_error() {
    let e = config_error("[device]\nn_depl = 1.2e22 cm-2\n");
    assert_eq!((e.line, e.column), (2, 17));
    match &e.kind {
        ConfigErrorKind::UnitMismatch { key, expected, found } => {
            assert_eq!(key, "n_depl");
            assert_eq!(expected, "cm-3");
            assert_eq!(found, "cm-2");
        }
        k => panic!("{k:?}"),
    }
    // unitless parameter given a unit
    assert!(matches!(
        config_error("[device]\neps_fe = 30 nm\n").kind,
        ConfigErrorKind::UnitMismatch { .. }
    ));
}

#[test]
fn unit_spellings_are_normalized() {
    let cfg = parse_str(
        "[device]\nn_depl = 1e22 cm⁻³\np_s = 25 µC/cm^2\n[leakage]\nc0nc = 1e-8 1/s\n",
        "t",
    )
    .unwrap();
    assert_eq!(cfg.params.n_depl, 1e22);
    assert_eq!(cfg.params.p_s, 25.0);
    let bare = parse_str("[device]\nn_depl = 1e22\n", "t").unwrap();
    assert_eq!(bare.params.n_depl, 1e22);
}

#[test]
fn structural_errors_are_anchored() {
    let e = config_error("n_depl = 1\n");
    assert!(matches!(e.kind, ConfigErrorKind::Syntax(_)) && e.line == 1);
    let e = config_error("[device]\nt_fe 10\n");
    assert!(matches!(e.kind, ConfigErrorKind::Syntax(_)) && e.line == 2);
    let e = config_error("[device\n");
    assert!(matches!(e.kind, ConfigErrorKind::Syntax(_)));
    let e = config_error("[devise]\n");
    assert!(matches!(&e.kind, ConfigErrorKind::UnknownSection { suggestion: Some(s), .. } if s == "device"));
    let e = config_error("[device]\nt_fe = ten nm\n");
    assert!(matches!(e.kind, ConfigErrorKind::BadValue { .. }));
    assert_eq!(e.column, 8);
    let e = config_error("[device]\nt_fe = 10\nt_fe = 11\n");
    assert!(matches!(e.kind, ConfigErrorKind::Duplicate { .. }) && e.line == 3);
    let e = config_error("[leakage]\nt_fe = 10\n");
    assert!(matches!(&e.kind, ConfigErrorKind::WrongSection { expected, .. } if expected == "device"));
    let e = config_error("[variability]\nn_depl = -1\n");
    assert!(matches!(e.kind, ConfigErrorKind::BadValue { .. }));
}

#[test]
fn out_of_bounds_values_fail_validation_not_parsing() {
    match parse_str("[device]\nalpha_fe = 1.2\n", "t") {
        Err(Error::Validation(v)) => assert_eq!(v[0].field, "alpha_fe"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn experiment_sections_and_lists() {
    let cfg = parse_str(
        "[window]\nbiases = 0, 0.1, 0.2 V\n[read]\nc_bl = 5 fF\nc_ref = 2e5 fF\nsa_offset_sigma = 1.5 mV\n\
         [montecarlo]\nsamples = 50\nseed = 9\n[pund]\ncycles = 3\n",
        "t",
    )
    .unwrap();
    assert_eq!(cfg.window.biases, vec![0.0, 0.1, 0.2]);
    assert_eq!(cfg.read.c_bl, 5.0);
    assert_eq!(cfg.read.c_ref, Some(2e5));
    assert_eq!(cfg.read.sa_offset_sigma, 1.5);
    assert_eq!(cfg.montecarlo.samples, 50);
    assert_eq!(cfg.montecarlo.seed, 9);
    assert_eq!(cfg.pund.cycles, 3);
    assert!(matches!(
        config_error("[pund]\ncycles = 2.5\n").kind,
        ConfigErrorKind::BadValue { .. }
    ));
    assert!(matches!(
        config_error("[read]\nc_bl = 1, 2 fF\n").kind,
        ConfigErrorKind::BadValue { .. }
    ));
    assert!(matches!(
        config_error("[read]\nc_bl = 10 pF\n").kind,
        ConfigErrorKind::UnitMismatch { .. }
    ));
}

#[test]
fn emitted_config_parses_back_identically() {
    let mut cfg = parse_config(&shipped()).unwrap();
    cfg.read.c_ref = Some(123.456);
    cfg.window.biases = vec![-0.1, 0.0, 0.3];
    cfg.montecarlo.seed = 77;
    let text = emit_config(&cfg);
    let back = parse_str(&text, "emitted").unwrap();
    assert_eq!(back, cfg);
    assert_eq!(emit_config(&back), text);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn params_round_trip_through_text(scales in prop::collection::vec(0.5f64..1.5, PARAM_SPECS.len())) {
        let mut p = ModelParams::nominal();
        for (spec, k) in PARAM_SPECS.iter().zip(&scales) {
            let v = (spec.get)(&p);
            // keep fractions inside [0, 1]
            let nv = if spec.name == "alpha_fe" { (v * k).min(1.0) } else { v * k };
            (spec.set)(&mut p, nv);
        }
        p.variability.insert("eps_fe".into(), 1.2345e-1 * scales[0]);
        let back = parse_str(&emit_params(&p), "prop").unwrap();
        prop_assert_eq!(back.params, p);
    }
}

fn sample_trace(n: usize) -> TraceSet {
    let mut tr = TraceSet::default();
    for (k, col) in tr.columns_mut().into_iter().enumerate() {
        *col = (0..n)
            .map(|i| ((i * 13 + k) as f64).sin() * 10f64.powi(k as i32 - 6) / 3.0)
            .collect();
    }
    tr.segment = (0..n)
        .map(|i| {
            if i % 2 == 0 {
                "rise".into()
            } else {
                "hold, with comma".into()
            }
        })
        .collect();
    tr
}

#[test]
fn trace_csv_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let tr = sample_trace(500);
    write_trace(&tr, &path).unwrap();
    assert_eq!(read_trace(&path).unwrap(), tr);
}

#[test]
fn trace_header_carries_units_in_fixed_order() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    write_trace(&sample_trace(3), &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    for (h, (name, unit)) in header.iter().zip(TRACE_COLUMNS) {
        assert_eq!(*h, format!("{name} [{unit}]"));
    }
    assert_eq!(header.last(), Some(&"segment"));
}

#[test]
fn million_row_trace_is_not_truncated() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.csv");
    let n = 1_000_000;
    let t = Table::new()
        .with("t", "s", (0..n).map(|i| i as f64 * 1e-9).collect())
        .with("v", "V", (0..n).map(|i| (i as f64).sqrt()).collect());
    t.write(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), n + 1);
    let back = Table::read(&path, &[]).unwrap();
    assert_eq!(back.rows(), n);
    assert_eq!(back, t);
}

#[test]
fn table_rejects_units_and_shapes_that_do_not_match() {
    let t = Table::new().with("v", "mV", vec![1.0]);
    assert!(t.require("v", "V").is_err());
    assert!(t.require("w", "V").is_err());
    let ragged = Table::new().with("a", "1", vec![1.0, 2.0]).with("b", "1", vec![1.0]);
    assert!(ragged.to_writer(Vec::new()).is_err());
    assert_eq!(
        Column::parse_header(" q_trap_dyn [C/m2] "),
        Column::new("q_trap_dyn", "C/m2")
    );
    assert_eq!(Column::parse_header("segment"), Column::new("segment", ""));
    let bad = Table::from_reader("v [V]\nabc\n".as_bytes(), &[]);
    assert!(bad.is_err());
}

#[test]
fn datasets_round_trip_through_a_directory() {
    let p = ModelParams::nominal();
    let cfg = Config::default();
    let mut sets = std::collections::BTreeMap::new();
    sets.insert(
        "leakage_fe".to_string(),
        synth::leakage(&p, Layer::Fe, &[0.5, 1.0, 2.0]).unwrap(),
    );
    sets.insert(
        "leakage_int".to_string(),
        synth::leakage(&p, Layer::Int, &[0.2, 0.4]).unwrap(),
    );
    let dir = tempfile::tempdir().unwrap();
    let paths = write_datasets(dir.path(), &sets).unwrap();
    assert_eq!(paths.len(), 2);
    let back = load_datasets(dir.path(), &cfg).unwrap();
    assert_eq!(back, sets);
}

#[test]
fn dataset_kind_follows_the_file_stem() {
    let cfg = Config::default();
    let t = Table::new().with("v", "V", vec![1.0]).with("j", "A/cm2", vec![1e-9]);
    assert!(dataset_from_table("mystery", &t, &cfg).is_err());
    assert!(dataset_from_table("leakage_xx", &t, &cfg).is_err());
    let d = dataset_from_table("leakage_int_wafer3", &t, &cfg).unwrap();
    assert_eq!(dataset_table(&d), t);
    let cv = Table::new()
        .with("up", "1", vec![1.0, 2.0])
        .with("v", "V", vec![0.0, 0.1])
        .with("c", "fF/um2", vec![20.0, 20.1]);
    assert!(dataset_from_table("cv", &cv, &cfg).is_err(), "flag column must be 0/1");
}

#[test]
fn defect_table_is_sorted_and_checked() {
    let t = Table::new()
        .with("cycles", "1", vec![1e6, 1e3])
        .with("n_tr_fe", "cm-3", vec![3e19, 1.5e19]);
    let rows = defect_rows(&t).unwrap();
    assert_eq!(rows[0].cycles, 1e3);
    assert_eq!(rows[1].n_tr_int, None);
    let wrong_unit = Table::new()
        .with("cycles", "1", vec![1.0])
        .with("n_tr_fe", "cm-2", vec![1.0]);
    assert!(defect_rows(&wrong_unit).is_err());
}

#[test]
fn manifest_records_config_hash_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = emit_config(&Config::default());
    let mut m = RunManifest::start(
        "simulate-cv",
        vec!["nvcap".into(), "simulate-cv".into()],
        config.clone(),
        vec![3],
    );
    let out = dir.path().join("cv.csv");
    std::fs::write(&out, "x\n").unwrap();
    m.add_output(&out, dir.path());
    m.add_input(&out).unwrap();
    let path = m.finish(dir.path()).unwrap();
    assert_eq!(path.file_name().unwrap(), MANIFEST_FILE);
    let back = RunManifest::read(&path).unwrap();
    assert_eq!(back.config_hash, sha256_hex(&config));
    assert_eq!(back.outputs, vec!["cv.csv".to_string()]);
    assert_eq!(back.seeds, vec![3]);
    assert_eq!(back.inputs[0].1, sha256_hex("x\n"));
    assert!(back.wall_clock_s >= 0.0);
    // the embedded config alone reproduces the resolved configuration
    assert_eq!(parse_str(&back.config, "manifest").unwrap(), Config::default());

    let tampered = std::fs::read_to_string(&path)
        .unwrap()
        .replace("n_depl = 1.2e22", "n_depl = 1.3e22");
    std::fs::write(&path, tampered).unwrap();
    assert!(RunManifest::read(&path).is_err());
}

#[test]
fn sha256_known_vector() {
    assert_eq!(
        sha256_hex("abc"),
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    );
}

#[test]
fn plot_scripts_reference_their_inputs_and_axes() {
    let kinds = [
        (FigureKind::Cv, "Capacitance (fF/µm²)"),
        (FigureKind::Pv, "Polarization (µC/cm²)"),
        (FigureKind::Kinetics, "Pulse width (s)"),
        (FigureKind::Endurance, "Cycles"),
        (FigureKind::McBands, "3σ"),
        (FigureKind::BlHistogram, "Bit-line voltage (mV)"),
        (FigureKind::Erase, "Erase amplitude (V)"),
        (FigureKind::Leakage, "|J| (A/cm²)"),
        (FigureKind::Degradation, "BL signal (mV)"),
        (FigureKind::Trace, "Time (s)"),
    ];
    for (k, axis) in kinds {
        let s = emit_plot_script(k, &[Path::new("a.csv"), Path::new("b c.csv")]);
        assert!(s.starts_with("#!/usr/bin/env python3"));
        assert!(s.contains("FILES = [\"a.csv\", \"b c.csv\"]"), "{s}");
        assert!(s.contains(axis), "{k:?} lacks axis label {axis}");
        assert!(s.contains(&format!("finish(fig, \"{}\")", k.name())));
    }
}
