use std::collections::BTreeMap;

use nvcap::calibration::{
    fit_stage, fit_trajectory, run_plan, synth, CalibrationPlan, Dataset, FreeParam, Layer, Stage, StageKind,
};
use nvcap::transient::experiments::{DefectRow, DefectTrajectory};
use nvcap::transient::SolverConfig;
use nvcap::ModelParams;

fn leakage_data(p: &ModelParams) -> BTreeMap<String, Dataset> {
    let v: Vec<f64> = (1..=12).map(|k| 0.25 * k as f64).collect();
    BTreeMap::from([("leakage_fe".to_string(), synth::leakage(p, Layer::Fe, &v).unwrap())])
}

fn leakage_stage(free: Vec<FreeParam>) -> Stage {
    CalibrationPlan::standard()
        .stages
        .into_iter()
        .find(|s| s.kind == StageKind::Leakage)
        .map(|s| Stage { free, ..s })
        .unwrap()
}

#[test]
fn exact_data_has_zero_loss_at_truth() {
    let truth = ModelParams::nominal();
    let data = leakage_data(&truth);
    let d = &data["leakage_fe"];
    assert_eq!(d.loss(&truth, &SolverConfig::default()).unwrap(), 0.0);
    let noisy = d.with_noise(0.02, 4);
    assert_eq!(noisy, d.with_noise(0.02, 4));
    let l = noisy.loss(&truth, &SolverConfig::default()).unwrap();
    assert!(l > 0.005 && l < 0.04, "{l}");
}

#[test]
fn leakage_stage_recovers_perturbed_parameters() {
    let truth = ModelParams::nominal();
    let data = leakage_data(&truth);
    let stage = leakage_stage(CalibrationPlan::standard().stages[3].free.clone());
    let mut p = truth.clone();
    p.n_tr_fe *= 4.0;
    p.w_tr_t = 2.4;
    p.w_tr_rel = 1.0;
    let r = fit_stage(&stage, &data, &mut p, &SolverConfig::default()).unwrap();
    assert!(
        r.final_loss < 1e-3 * r.initial_loss,
        "{} -> {}",
        r.initial_loss,
        r.final_loss
    );
    assert!(r.loss_curve.windows(2).all(|w| w[1] <= w[0]));
    for (name, tol) in [("n_tr_fe", 0.02), ("w_tr_t", 0.01), ("w_tr_rel", 0.01)] {
        let got = p.get(name).unwrap();
        let want = truth.get(name).unwrap();
        assert!((got / want - 1.0).abs() < tol, "{name}: {got} vs {want}");
        assert_eq!(r.params.iter().find(|f| f.name == name).unwrap().value, got);
    }
}

#[test]
fn stage_without_free_parameters_only_scores() {
    let truth = ModelParams::nominal();
    let data = leakage_data(&truth);
    let mut p = truth.clone();
    p.n_tr_fe *= 2.0;
    let before = p.clone();
    let r = fit_stage(&leakage_stage(vec![]), &data, &mut p, &SolverConfig::default()).unwrap();
    assert_eq!(p, before);
    assert_eq!(r.initial_loss, r.final_loss);
    assert!(r.params.is_empty() && r.iterations == 0);
}

#[test]
fn plan_structure_is_checked() {
    let p = ModelParams::nominal();
    let data = leakage_data(&p);
    let one = |free| CalibrationPlan {
        stages: vec![leakage_stage(free)],
        passes: 1,
        solver: SolverConfig::default(),
    };
    let err = |plan: CalibrationPlan| run_plan(&plan, &data, &p).unwrap_err().to_string();

    assert!(err(CalibrationPlan::standard()).contains("needs dataset `cv`"));
    assert!(err(one(vec![FreeParam::new("n_tr_fee", 1.0, 2.0, false)])).contains("unknown parameter"));
    assert!(err(one(vec![FreeParam::new("n_tr_fe", 0.0, 1e20, true)])).contains("bad bounds"));
    assert!(err(one(vec![FreeParam::new("w_tr_t", 3.0, 1.0, false)])).contains("bad bounds"));
    let mut dup = one(vec![FreeParam::new("w_tr_t", 1.0, 3.0, false)]);
    dup.stages.push(dup.stages[0].clone());
    assert!(err(dup).contains("free in both"));
    let mut order = one(vec![]);
    let mut first = order.stages[0].clone();
    first.kind = StageKind::Switching;
    order.stages.insert(0, first);
    assert!(err(order).contains("out of order"));
    let mut none = one(vec![]);
    none.passes = 0;
    assert!(err(none).contains("at least one pass"));

    let mut bad = p.clone();
    bad.eps_fe = -1.0;
    assert!(matches!(
        run_plan(&one(vec![]), &data, &bad),
        Err(nvcap::Error::Validation(_))
    ));
}

#[test]
fn standard_plan_frees_every_parameter_once() {
    let plan = CalibrationPlan::standard();
    let mut names: Vec<&str> = plan
        .stages
        .iter()
        .flat_map(|s| s.free.iter().map(|f| f.name.as_str()))
        .collect();
    let n = names.len();
    names.sort();
    names.dedup();
    assert_eq!(names.len(), n);
    assert!(plan.stages.windows(2).all(|w| w[0].kind < w[1].kind));
}

#[test]
fn trajectory_fit_recovers_power_law() {
    let base = ModelParams::nominal();
    let law = DefectTrajectory::Power {
        n0: 3e5,
        gamma: 0.7,
        include_interface: false,
    };
    let rows: Vec<DefectRow> = (0..=16)
        .map(|k| {
            let cycles = 10f64.powf(2.0 + 0.5 * k as f64);
            DefectRow {
                cycles,
                n_tr_fe: law.apply(&base, cycles).n_tr_fe,
                n_tr_int: None,
            }
        })
        .collect();
    let fit = fit_trajectory(&rows, base.n_tr_fe).unwrap();
    assert!((fit.n0 / 3e5 - 1.0).abs() < 1e-3, "{fit:?}");
    assert!((fit.gamma - 0.7).abs() < 1e-3, "{fit:?}");
    assert!(fit.rms_log < 1e-4);
    assert!(fit_trajectory(&rows[..1], base.n_tr_fe).is_err());
}
