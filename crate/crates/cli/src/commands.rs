use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Parser;
use nvcap::calibration::{run_plan, synth, CalibrationPlan, Dataset, FitReport, Layer};
use nvcap::io::config::{emit_config, emit_params, parse_config, parse_str, Config};
use nvcap::io::data::{defect_rows, load_datasets, write_datasets};
use nvcap::io::manifest::RunManifest;
use nvcap::io::plot::{emit_plot_script, FigureKind};
use nvcap::io::report;
use nvcap::io::table::{write_trace, Table};
use nvcap::leakage::leakage_sweep;
use nvcap::montecarlo::{run_mc, CvSpread, DrawnParameters, EraseSpread, McExperiment, WindowSpread};
use nvcap::readout::{degradation_sweep, read_pair, read_yield, written_states, DefectAxis, WriteScheme};
use nvcap::transient::experiments::{
    experiment_cv, experiment_endurance, experiment_erase_staircase, experiment_kinetics, experiment_pund,
    memory_window, DefectTrajectory, KineticsTarget, WindowConfig,
};
use nvcap::{Error, Result};

use crate::{Cli, Command, McKind, Target};

const DEFAULT_PARAMS: &str = include_str!("../../../params/nominal.params");

/// Output directory plus the manifest that lists what went into it.
struct Run {
    out: PathBuf,
    manifest: RunManifest,
}

impl Run {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        let p = self.path(name);
        t.write(&p)?;
        self.manifest.add_output(&p, &self.out);
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, body)?;
        self.manifest.add_output(&p, &self.out);
        Ok(())
    }

    fn json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let body = serde_json::to_string_pretty(value).map_err(|e| Error::Data(e.to_string()))?;
        self.text(name, &body)
    }

    fn plot(&mut self, kind: FigureKind, csv: &[&str]) -> Result<()> {
        let paths: Vec<&Path> = csv.iter().map(Path::new).collect();
        self.text(&format!("plot_{}.py", kind.name()), &emit_plot_script(kind, &paths))
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate => "validate",
        Command::LeakageSweep { .. } => "leakage-sweep",
        Command::CvSweep { .. } => "cv-sweep",
        Command::SimulateCv => "simulate-cv",
        Command::SimulatePund => "simulate-pund",
        Command::SimulateKinetics { .. } => "simulate-kinetics",
        Command::SimulateErase => "simulate-erase",
        Command::SimulateEndurance { .. } => "simulate-endurance",
        Command::Montecarlo { .. } => "montecarlo",
        Command::Readout { .. } => "readout",
        Command::Calibrate { .. } => "calibrate",
        Command::Replay { .. } => "replay",
    }
}

pub fn run(cli: Cli, args: Vec<String>) -> Result<String> {
    let out = cli.global.out.clone();
    if let Command::Replay { manifest } = &cli.command {
        let m = RunManifest::read(manifest)?;
        let inner = Cli::try_parse_from(&m.args).map_err(|e| Error::Data(format!("manifest arguments: {e}")))?;
        if matches!(inner.command, Command::Replay { .. }) {
            return Err(Error::Data("a replay manifest cannot be replayed".into()));
        }
        let cfg = parse_str(&m.config, &manifest.display().to_string())?;
        return execute(inner.command, cfg, out, m.args);
    }
    let mut cfg = match &cli.global.params {
        Some(p) => parse_config(p)?,
        None => parse_str(DEFAULT_PARAMS, "<built-in nominal.params>")?,
    };
    if let Some(seed) = cli.global.seed {
        cfg.montecarlo.seed = seed;
    }
    execute(cli.command, cfg, out, args)
}

fn execute(command: Command, mut cfg: Config, out: PathBuf, args: Vec<String>) -> Result<String> {
    // Options that change the configuration are applied before it is hashed.
    let mut inputs = Vec::new();
    match &command {
        Command::Readout { circuit: Some(c), .. } => {
            cfg.read = parse_config(c)?.read;
        }
        Command::SimulateEndurance { defects: Some(d) } => {
            cfg.endurance.trajectory = DefectTrajectory::Table(defect_rows(&Table::read(d, &[])?)?);
            inputs.push(d.clone());
        }
        Command::Calibrate {
            data, synthesize: None, ..
        } => inputs.push(data.clone()),
        _ => {}
    }
    std::fs::create_dir_all(&out)?;
    let seeds = match command {
        Command::Montecarlo { .. } | Command::Readout { .. } | Command::Calibrate { .. } => {
            vec![cfg.montecarlo.seed]
        }
        _ => Vec::new(),
    };
    let mut run = Run {
        manifest: RunManifest::start(command_name(&command), args, emit_config(&cfg), seeds),
        out,
    };
    for i in &inputs {
        run.manifest.add_input(i)?;
    }
    run.text("resolved.params", &emit_config(&cfg))?;
    let summary = dispatch(command, &cfg, &mut run)?;
    let m = run.manifest.finish(&run.out)?;
    Ok(format!("{summary}\nmanifest: {}", m.display()))
}

fn dispatch(command: Command, cfg: &Config, run: &mut Run) -> Result<String> {
    let p = &cfg.params;
    let solver = &cfg.solver;
    let mut s = String::new();
    match command {
        Command::Validate => {
            let n = nvcap::params::PARAM_SPECS.len();
            write!(
                s,
                "configuration valid: {n} parameters, {} with variability",
                p.variability.len()
            )
            .ok();
        }
        Command::LeakageSweep { v_min, v_max, points } => {
            if points < 2 || !(v_max > v_min) {
                return Err(Error::Data(
                    "leakage sweep needs v_max > v_min and at least 2 points".into(),
                ));
            }
            let v: Vec<f64> = (0..points)
                .map(|i| v_min + (v_max - v_min) * i as f64 / (points - 1) as f64)
                .collect();
            let rows = leakage_sweep(p, &v)?;
            run.table("leakage.csv", &report::leakage_table(&rows))?;
            run.plot(FigureKind::Leakage, &["leakage.csv"])?;
            write!(s, "leakage sweep: {points} points").ok();
        }
        Command::CvSweep { v_min, v_max, v_step } => {
            if !(v_step > 0.0 && v_max >= v_min) {
                return Err(Error::Data("cv sweep needs v_step > 0 and v_max >= v_min".into()));
            }
            let n = ((v_max - v_min) / v_step).round() as usize;
            let wc = WindowConfig {
                biases: (0..=n).map(|i| v_min + v_step * i as f64).collect(),
                ..cfg.window.clone()
            };
            let w = memory_window(p, &wc, solver)?;
            let d = w.delta();
            let t = Table::new()
                .with("v", "V", w.biases.clone())
                .with("c_hcs", "fF/um2", w.c_hcs.clone())
                .with("c_lcs", "fF/um2", w.c_lcs.clone())
                .with("delta", "fF/um2", d.clone());
            run.table("cv_sweep.csv", &t)?;
            let k0 = w.biases.iter().position(|b| b.abs() < 1e-12);
            write!(s, "stored-state C–V: {} biases", w.biases.len()).ok();
            if let Some(k) = k0 {
                write!(s, ", window at 0 V {:.4} fF/um2", d[k]).ok();
            }
        }
        Command::SimulateCv => {
            let curve = experiment_cv(p, &cfg.cv, solver)?;
            run.table("cv.csv", &report::cv_table(&curve))?;
            run.plot(FigureKind::Cv, &["cv.csv"])?;
            write!(s, "C–V loop: {} + {} points", curve.up.len(), curve.down.len()).ok();
            if let (Some(b), Some(a)) = (curve.built_in_bias(), curve.peak_asymmetry()) {
                write!(s, ", built-in bias {:.4} V, peak asymmetry {:.4}", b, a).ok();
            }
        }
        Command::SimulatePund => {
            let r = experiment_pund(p, &cfg.pund, solver)?;
            run.table("pv.csv", &report::pv_table(&r))?;
            let tp = run.path("pund_trace.csv");
            write_trace(&r.trace, &tp)?;
            run.manifest.add_output(&tp, &run.out);
            run.plot(FigureKind::Pv, &["pv.csv"])?;
            write!(s, "PUND: 2Pr {:.4} uC/cm2, loop closure {:.3e}", r.two_pr, r.closure).ok();
        }
        Command::SimulateKinetics { target } => {
            let mut kc = cfg.kinetics.clone();
            kc.target = match target {
                Target::Up => KineticsTarget::Up,
                Target::Down => KineticsTarget::Down,
            };
            let pts = experiment_kinetics(p, &kc, solver)?;
            run.table("kinetics.csv", &report::kinetics_table(&pts))?;
            run.plot(FigureKind::Kinetics, &["kinetics.csv"])?;
            write!(s, "switching kinetics: {} pulses", pts.len()).ok();
        }
        Command::SimulateErase => {
            let rows = experiment_erase_staircase(p, &cfg.erase, solver)?;
            run.table("erase.csv", &report::erase_table(&rows, &cfg.erase.read_biases))?;
            run.plot(FigureKind::Erase, &["erase.csv"])?;
            write!(s, "erase staircase: {} amplitudes", rows.len()).ok();
        }
        Command::SimulateEndurance { .. } => {
            let rows = experiment_endurance(p, &cfg.endurance, solver)?;
            run.table(
                "endurance.csv",
                &report::endurance_table(&rows, &cfg.endurance.leakage_voltages),
            )?;
            run.plot(FigureKind::Endurance, &["endurance.csv"])?;
            write!(s, "endurance: {} checkpoints", rows.len()).ok();
        }
        Command::Montecarlo { experiment, samples } => {
            let n = samples.unwrap_or(cfg.montecarlo.samples);
            let exp: Box<dyn McExperiment> = match experiment {
                McKind::Params => {
                    if p.variability.is_empty() {
                        return Err(Error::MonteCarlo(
                            "the configuration has no [variability] entries".into(),
                        ));
                    }
                    Box::new(DrawnParameters::varied(p))
                }
                McKind::Cv => Box::new(CvSpread {
                    cv: cfg.cv,
                    solver: *solver,
                }),
                McKind::Window => Box::new(WindowSpread {
                    window: cfg.window.clone(),
                    solver: *solver,
                }),
                McKind::Erase => Box::new(EraseSpread {
                    erase: cfg.erase.clone(),
                    solver: *solver,
                }),
            };
            let r = run_mc(exp.as_ref(), p, n, cfg.montecarlo.seed)?;
            run.table("mc_samples.csv", &report::mc_table(&r))?;
            run.table("mc_summary.csv", &report::mc_summary_table(&r))?;
            if experiment != McKind::Params {
                run.plot(FigureKind::McBands, &["mc_summary.csv"])?;
            }
            write!(
                s,
                "monte carlo `{}`: {} samples, {} failed",
                r.experiment,
                n,
                r.failures.len()
            )
            .ok();
            for sm in r.summary.iter().take(8) {
                write!(s, "\n  {:<16} mean {:.6e}  std {:.4e}", sm.name, sm.mean, sm.std).ok();
            }
        }
        Command::Readout {
            r#yield,
            degradation,
            densities,
            ..
        } => {
            let writes = WriteScheme {
                erase: cfg.window.erase,
                program: cfg.window.program,
            };
            let states = written_states(p, &writes, solver)?;
            let pair = read_pair(&states, p, &cfg.read, 0.0, solver)?;
            run.json("readout.json", &pair)?;
            write!(
                s,
                "read: HCS {:.3} mV, LCS {:.3} mV, separation {:.3} mV, margin {:.3} mV, C_ref {:.4} fF",
                pair.hcs.v_bl, pair.lcs.v_bl, pair.separation, pair.margin, pair.c_ref
            )
            .ok();
            if let Some(n) = r#yield {
                let y = read_yield(p, &cfg.read, &writes, n, cfg.montecarlo.seed, solver)?;
                run.table("read_samples.csv", &report::mc_table(&y.report))?;
                run.table("bl_histogram.csv", &report::bl_histogram_table(&y, 40))?;
                run.plot(FigureKind::BlHistogram, &["bl_histogram.csv"])?;
                let summary = serde_json::json!({
                    "c_ref": y.c_ref,
                    "yield_bit1": y.yield_bit1,
                    "yield_bit0": y.yield_bit0,
                    "margin_percentiles_mv": y.margin_percentiles,
                    "usable_offset_mv": y.usable_offset,
                    "threshold_mv": y.threshold_mv,
                });
                run.json("yield.json", &summary)?;
                write!(
                    s,
                    "\nyield over {n} devices: bit1 {:.4}, bit0 {:.4}, usable offset {:.3} mV",
                    y.yield_bit1, y.yield_bit0, y.usable_offset
                )
                .ok();
            }
            if let Some(axis) = degradation {
                let axis: DefectAxis = axis.parse().map_err(Error::Data)?;
                let d = densities.unwrap_or_else(|| default_densities(axis, p));
                let sweep = degradation_sweep(p, &cfg.read, axis, &d, &writes, solver)?;
                let name = format!("degradation_{}.csv", axis.name().replace('+', "_"));
                run.table(&name, &report::degradation_table(&sweep))?;
                run.plot(FigureKind::Degradation, &[&name])?;
                write!(
                    s,
                    "\ndegradation `{}`: signal change {:.4} mV",
                    axis.name(),
                    sweep.signal_change()
                )
                .ok();
            }
        }
        Command::Calibrate {
            data,
            plan,
            stages,
            passes,
            synthesize,
        } => {
            if let Some(noise) = synthesize {
                let sets = synthetic_datasets(cfg, noise)?;
                for path in write_datasets(&data, &sets)? {
                    run.manifest.add_output(&path, &run.out);
                }
                write!(s, "wrote {} synthetic datasets to {}", sets.len(), data.display()).ok();
                return Ok(s);
            }
            let mut plan = match plan.as_str() {
                "standard" => CalibrationPlan::standard(),
                other => return Err(Error::Fit(format!("unknown plan `{other}`; available: standard"))),
            };
            plan.solver = *solver;
            if let Some(keep) = stages {
                plan.stages
                    .retain(|st| keep.iter().any(|k| st.name.starts_with(k.as_str())));
            }
            if let Some(n) = passes {
                plan.passes = n;
            }
            let datasets = load_datasets(&data, cfg)?;
            let (fitted, rep) = run_plan(&plan, &datasets, p)?;
            run.text("fitted.params", &emit_params(&fitted))?;
            run.json("fit_report.json", &rep)?;
            run.table("fit_params.csv", &fit_table(&rep))?;
            write!(s, "calibration: {} stage runs", rep.stages.len()).ok();
            for st in &rep.stages {
                write!(
                    s,
                    "\n  {} (pass {}): loss {:.4e} -> {:.4e}",
                    st.name, st.pass, st.initial_loss, st.final_loss
                )
                .ok();
            }
        }
        Command::Replay { .. } => unreachable!("handled before dispatch"),
    }
    Ok(s)
}

fn default_densities(axis: DefectAxis, p: &nvcap::ModelParams) -> Vec<f64> {
    let factors = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0];
    match axis {
        DefectAxis::FeBulk => factors.iter().map(|f| f * p.n_tr_fe).collect(),
        DefectAxis::FeAndInterface => factors.iter().map(|f| f * p.n_tr_int).collect(),
        DefectAxis::InterfaceUp => (0..=4).map(|i| 2.5e13 * i as f64).collect(),
    }
}

/// The datasets of the standard plan, simulated from the configured device.
fn synthetic_datasets(cfg: &Config, noise: f64) -> Result<BTreeMap<String, Dataset>> {
    let p = &cfg.params;
    let leak_v: Vec<f64> = (1..=12).map(|i| 0.25 * i as f64).collect();
    let mut sets = BTreeMap::new();
    sets.insert("cv".to_string(), synth::cv(p, &cfg.cv, &cfg.solver)?);
    sets.insert("pv".to_string(), synth::pv(p, &cfg.pund, 20, &cfg.solver)?);
    sets.insert("leakage_fe".to_string(), synth::leakage(p, Layer::Fe, &leak_v)?);
    sets.insert("kinetics".to_string(), synth::kinetics(p, &cfg.kinetics, &cfg.solver)?);
    let seed = cfg.montecarlo.seed;
    Ok(sets
        .into_iter()
        .enumerate()
        .map(|(k, (n, d))| (n, d.with_noise(noise, seed.wrapping_add(k as u64))))
        .collect())
}

fn fit_table(rep: &FitReport) -> Table {
    let rows: Vec<_> = rep
        .stages
        .iter()
        .flat_map(|st| st.params.iter().map(move |fp| (st, fp)))
        .collect();
    let mut t = Table::new()
        .with("pass", "1", rows.iter().map(|r| r.0.pass as f64).collect())
        .with("initial", "", rows.iter().map(|r| r.1.initial).collect())
        .with("value", "", rows.iter().map(|r| r.1.value).collect())
        .with("confidence", "", rows.iter().map(|r| r.1.confidence).collect())
        .with(
            "at_bound",
            "1",
            rows.iter().map(|r| f64::from(u8::from(r.1.at_bound))).collect(),
        );
    t.push_text("stage", rows.iter().map(|r| r.0.name.clone()).collect());
    t.push_text("parameter", rows.iter().map(|r| r.1.name.clone()).collect());
    t
}
