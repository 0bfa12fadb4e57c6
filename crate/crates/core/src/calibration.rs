//! Hierarchical parameter extraction.
//!
//! A [`CalibrationPlan`] is an ordered list of stages. Each stage frees a few
//! parameters, freezes the rest and minimizes the mean relative RMS misfit of
//! its target datasets with a bounded Nelder–Mead search and restarts.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leakage::{tat_current_density, TatLayerParams};
use crate::params::{find_spec, ModelParams};
use crate::transient::experiments::{
    experiment_cv, experiment_kinetics, experiment_pund, CvConfig, KineticsConfig, KineticsTarget, PundConfig, PvPoint,
    WritePulse,
};
use crate::transient::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layer {
    Fe,
    Int,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvDatum {
    /// Increasing-voltage branch.
    pub up: bool,
    /// V
    pub v: f64,
    /// fF/µm²
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvDatum {
    /// 0 and 1: rising and falling half of the positive pulse; 2 and 3: the
    /// same for the negative pulse.
    pub branch: usize,
    /// V
    pub v: f64,
    /// µC/cm²
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageDatum {
    /// Layer voltage, V.
    pub v: f64,
    /// A/cm²
    pub j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KineticsDatum {
    /// V
    pub amplitude: f64,
    /// s
    pub width: f64,
    /// Switched fraction.
    pub switched: f64,
}

/// A measured (or synthesized) curve together with the protocol that
/// reproduces it in simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Dataset {
    Cv {
        config: CvConfig,
        points: Vec<CvDatum>,
    },
    Pv {
        config: PundConfig,
        points: Vec<PvDatum>,
    },
    Leakage {
        layer: Layer,
        points: Vec<LeakageDatum>,
    },
    Kinetics {
        target: KineticsTarget,
        reset: WritePulse,
        points: Vec<KineticsDatum>,
    },
}

/// Splits a PUND loop into its four monotone voltage branches.
pub fn pv_branches(points: &[PvPoint]) -> [Vec<PvPoint>; 4] {
    let mut out: [Vec<PvPoint>; 4] = Default::default();
    let split = points.iter().position(|p| p.v < 0.0).unwrap_or(points.len());
    for (k, half) in [&points[..split], &points[split..]].into_iter().enumerate() {
        let peak = half
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.v.abs().total_cmp(&b.1.v.abs()))
            .map_or(0, |(i, _)| i);
        out[2 * k] = half[..=peak.min(half.len().saturating_sub(1))].to_vec();
        out[2 * k + 1] = half[peak..].to_vec();
    }
    out
}

/// Linear interpolation on a branch that is monotone in `v`; clamps at the ends.
fn interp_branch(branch: &[PvPoint], v: f64) -> f64 {
    let mut pts: Vec<(f64, f64)> = branch.iter().map(|p| (p.v, p.p)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    interp(&pts, v)
}

fn interp(pts: &[(f64, f64)], x: f64) -> f64 {
    match pts {
        [] => f64::NAN,
        [only] => only.1,
        _ => {
            if x <= pts[0].0 {
                return pts[0].1;
            }
            let i = pts.partition_point(|p| p.0 < x);
            if i >= pts.len() {
                return pts[pts.len() - 1].1;
            }
            let (a, b) = (pts[i - 1], pts[i]);
            if b.0 == a.0 {
                b.1
            } else {
                a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
            }
        }
    }
}

fn unique_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

impl Dataset {
    pub fn kind(&self) -> &'static str {
        match self {
            Dataset::Cv { .. } => "cv",
            Dataset::Pv { .. } => "pv",
            Dataset::Leakage { .. } => "leakage",
            Dataset::Kinetics { .. } => "kinetics",
        }
    }

    pub fn len(&self) -> usize {
        self.measured().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn measured(&self) -> Vec<f64> {
        match self {
            Dataset::Cv { points, .. } => points.iter().map(|p| p.c).collect(),
            Dataset::Pv { points, .. } => points.iter().map(|p| p.p).collect(),
            Dataset::Leakage { points, .. } => points.iter().map(|p| p.j).collect(),
            Dataset::Kinetics { points, .. } => points.iter().map(|p| p.switched).collect(),
        }
    }

    /// Smallest magnitude used to normalize residuals, as a fraction of the
    /// largest measured magnitude. Curves that cross zero need a floor.
    fn floor_fraction(&self) -> f64 {
        match self {
            Dataset::Cv { .. } | Dataset::Leakage { .. } => 0.0,
            Dataset::Pv { .. } => 0.1,
            Dataset::Kinetics { .. } => 0.05,
        }
    }

    /// Model values at the measured abscissae.
    pub fn simulate(&self, params: &ModelParams, solver: &SolverConfig) -> Result<Vec<f64>> {
        match self {
            Dataset::Cv { config, points } => {
                let curve = experiment_cv(params, config, solver)?;
                points
                    .iter()
                    .map(|d| {
                        let c = if d.up { curve.up_at(d.v) } else { curve.down_at(d.v) };
                        c.ok_or_else(|| Error::Data(format!("C-V point {} V outside the sweep", d.v)))
                    })
                    .collect()
            }
            Dataset::Pv { config, points } => {
                let r = experiment_pund(params, config, solver)?;
                let branches = pv_branches(&r.loop_points);
                points
                    .iter()
                    .map(|d| match branches.get(d.branch) {
                        Some(b) if !b.is_empty() => Ok(interp_branch(b, d.v)),
                        _ => Err(Error::Data(format!("P-V branch {} unavailable", d.branch))),
                    })
                    .collect()
            }
            Dataset::Leakage { layer, points } => {
                let tat = match layer {
                    Layer::Fe => TatLayerParams::ferroelectric(params),
                    Layer::Int => TatLayerParams::interface(params),
                };
                points
                    .iter()
                    .map(|d| tat_current_density(d.v, &tat).map_err(Error::from))
                    .collect()
            }
            Dataset::Kinetics { target, reset, points } => {
                let kc = KineticsConfig {
                    target: *target,
                    amplitudes: unique_sorted(points.iter().map(|p| p.amplitude)),
                    widths: unique_sorted(points.iter().map(|p| p.width)),
                    reset: *reset,
                };
                let sim = experiment_kinetics(params, &kc, solver)?;
                points
                    .iter()
                    .map(|d| {
                        sim.iter()
                            .find(|s| s.amplitude == d.amplitude && s.width == d.width)
                            .map(|s| s.switched)
                            .ok_or_else(|| Error::Data("kinetics point missing from simulation".into()))
                    })
                    .collect()
            }
        }
    }

    /// Relative RMS misfit between `model` and the measured values.
    pub fn relative_rms(&self, model: &[f64]) -> f64 {
        let meas = self.measured();
        if meas.is_empty() || meas.len() != model.len() {
            return f64::NAN;
        }
        let floor = self.floor_fraction() * meas.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let ss: f64 = meas
            .iter()
            .zip(model)
            .map(|(m, s)| ((s - m) / m.abs().max(floor).max(f64::MIN_POSITIVE)).powi(2))
            .sum();
        (ss / meas.len() as f64).sqrt()
    }

    pub fn loss(&self, params: &ModelParams, solver: &SolverConfig) -> Result<f64> {
        Ok(self.relative_rms(&self.simulate(params, solver)?))
    }

    /// Copy with every measured value multiplied by `1 + rel·z`, `z` standard normal.
    pub fn with_noise(&self, rel: f64, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut noisy = |x: &mut f64| {
            let z: f64 = StandardNormal.sample(&mut rng);
            *x *= 1.0 + rel * z;
        };
        let mut d = self.clone();
        match &mut d {
            Dataset::Cv { points, .. } => points.iter_mut().for_each(|p| noisy(&mut p.c)),
            Dataset::Pv { points, .. } => points.iter_mut().for_each(|p| noisy(&mut p.p)),
            Dataset::Leakage { points, .. } => points.iter_mut().for_each(|p| noisy(&mut p.j)),
            Dataset::Kinetics { points, .. } => points.iter_mut().for_each(|p| noisy(&mut p.switched)),
        }
        d
    }
}

/// Synthetic datasets generated from a known parameter set.
pub mod synth {
    use super::*;

    pub fn cv(params: &ModelParams, config: &CvConfig, solver: &SolverConfig) -> Result<Dataset> {
        let curve = experiment_cv(params, config, solver)?;
        let points = curve
            .up
            .iter()
            .map(|p| CvDatum {
                up: true,
                v: p.v,
                c: p.c,
            })
            .chain(curve.down.iter().map(|p| CvDatum {
                up: false,
                v: p.v,
                c: p.c,
            }))
            .collect();
        Ok(Dataset::Cv {
            config: *config,
            points,
        })
    }

    /// P–V loop sampled at `per_branch` evenly spaced voltages on each branch.
    pub fn pv(params: &ModelParams, config: &PundConfig, per_branch: usize, solver: &SolverConfig) -> Result<Dataset> {
        let r = experiment_pund(params, config, solver)?;
        let branches = pv_branches(&r.loop_points);
        let a = config.amplitude;
        let mut points = Vec::new();
        for (k, b) in branches.iter().enumerate() {
            let sign = if k < 2 { 1.0 } else { -1.0 };
            for i in 0..per_branch {
                let v = sign * a * (i as f64 + 0.5) / per_branch as f64;
                points.push(PvDatum {
                    branch: k,
                    v,
                    p: interp_branch(b, v),
                });
            }
        }
        Ok(Dataset::Pv {
            config: *config,
            points,
        })
    }

    pub fn leakage(params: &ModelParams, layer: Layer, voltages: &[f64]) -> Result<Dataset> {
        let tat = match layer {
            Layer::Fe => TatLayerParams::ferroelectric(params),
            Layer::Int => TatLayerParams::interface(params),
        };
        let points = voltages
            .iter()
            .map(|&v| {
                Ok(LeakageDatum {
                    v,
                    j: tat_current_density(v, &tat)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset::Leakage { layer, points })
    }

    pub fn kinetics(params: &ModelParams, kc: &KineticsConfig, solver: &SolverConfig) -> Result<Dataset> {
        let sim = experiment_kinetics(params, kc, solver)?;
        Ok(Dataset::Kinetics {
            target: kc.target,
            reset: kc.reset,
            points: sim
                .iter()
                .map(|s| KineticsDatum {
                    amplitude: s.amplitude,
                    width: s.width,
                    switched: s.switched,
                })
                .collect(),
        })
    }
}

/// Extraction steps in the order they must run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StageKind {
    BaseCapacitance,
    PeakAmplitude,
    Asymmetry,
    Leakage,
    Switching,
}

/// A parameter freed by a stage with its search interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeParam {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    /// Search in log space (requires `lower > 0`).
    pub log: bool,
}

impl FreeParam {
    pub fn new(name: &str, lower: f64, upper: f64, log: bool) -> Self {
        Self {
            name: name.into(),
            lower,
            upper,
            log,
        }
    }

    fn to_value(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        if self.log {
            (self.lower.ln() + u * (self.upper.ln() - self.lower.ln())).exp()
        } else {
            self.lower + u * (self.upper - self.lower)
        }
    }

    fn to_unit(&self, v: f64) -> f64 {
        let u = if self.log {
            (v.max(self.lower).ln() - self.lower.ln()) / (self.upper.ln() - self.lower.ln())
        } else {
            (v - self.lower) / (self.upper - self.lower)
        };
        u.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub kind: StageKind,
    /// Names of the target datasets, weighted equally.
    pub datasets: Vec<String>,
    pub free: Vec<FreeParam>,
    /// Nelder–Mead iterations per restart.
    pub max_iters: u64,
    pub restarts: usize,
    /// Standard deviation of the simplex losses that ends a restart.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPlan {
    pub stages: Vec<Stage>,
    /// Number of times the whole stage sequence is executed. A second pass
    /// lets early stages see the values fitted by later ones.
    pub passes: usize,
    pub solver: SolverConfig,
}

fn stage(name: &str, kind: StageKind, datasets: &[&str], free: Vec<FreeParam>) -> Stage {
    Stage {
        name: name.into(),
        kind,
        datasets: datasets.iter().map(|s| s.to_string()).collect(),
        free,
        max_iters: 150,
        restarts: 2,
        tolerance: 1e-8,
    }
}

impl CalibrationPlan {
    /// The five-step flow: base capacitance, peak amplitude, asymmetry,
    /// leakage and switching, with dataset names `cv`, `pv`, `leakage_fe`
    /// and `kinetics`.
    pub fn standard() -> Self {
        use StageKind::*;
        Self {
            stages: vec![
                stage(
                    "a_base_capacitance",
                    BaseCapacitance,
                    &["cv", "pv"],
                    vec![
                        FreeParam::new("eps_fe", 20.0, 150.0, false),
                        FreeParam::new("eps_de", 5.0, 50.0, false),
                        FreeParam::new("eps_int", 3.0, 20.0, false),
                        FreeParam::new("alpha_fe", 0.2, 0.95, false),
                    ],
                ),
                stage(
                    "b_peak_amplitude",
                    PeakAmplitude,
                    &["cv"],
                    vec![FreeParam::new("n_depl", 1e21, 1e23, true)],
                ),
                stage(
                    "c_asymmetry",
                    Asymmetry,
                    &["cv"],
                    vec![
                        FreeParam::new("n_tr_depl_down", 0.0, 1.5e14, false),
                        FreeParam::new("n_tr_depl_up", 0.0, 1.5e14, false),
                    ],
                ),
                stage(
                    "d_leakage",
                    Leakage,
                    &["leakage_fe"],
                    vec![
                        FreeParam::new("n_tr_fe", 1e17, 1e21, true),
                        FreeParam::new("w_tr_t", 1.0, 3.0, false),
                        FreeParam::new("w_tr_rel", 0.5, 2.0, false),
                    ],
                ),
                stage(
                    "e_switching",
                    Switching,
                    &["pv", "kinetics"],
                    vec![
                        FreeParam::new("tau_0", 1e-8, 1e-5, true),
                        FreeParam::new("e_a", 1e8, 1e9, true),
                        FreeParam::new("beta", 1.0, 4.0, false),
                        FreeParam::new("v_c_pos", 0.5, 2.0, false),
                        FreeParam::new("v_c_neg", -2.0, -0.5, false),
                    ],
                ),
            ],
            passes: 2,
            solver: SolverConfig::default(),
        }
    }

    /// Structural checks: known names, sane bounds, each free parameter in
    /// exactly one stage, stage kinds in flow order.
    pub fn validate(&self, datasets: &BTreeMap<String, Dataset>) -> Result<()> {
        let fail = |m: String| Err(Error::Fit(m));
        let mut seen = BTreeMap::new();
        for (i, s) in self.stages.iter().enumerate() {
            if i > 0 && s.kind < self.stages[i - 1].kind {
                return fail(format!("stage `{}` is out of order", s.name));
            }
            for d in &s.datasets {
                if !datasets.contains_key(d) {
                    return fail(format!("stage `{}` needs dataset `{d}`", s.name));
                }
            }
            for f in &s.free {
                if find_spec(&f.name).is_none() {
                    return fail(format!("stage `{}` frees unknown parameter `{}`", s.name, f.name));
                }
                if !(f.lower < f.upper) || (f.log && !(f.lower > 0.0)) {
                    return fail(format!("bad bounds for `{}`", f.name));
                }
                if let Some(prev) = seen.insert(f.name.clone(), s.name.clone()) {
                    return fail(format!("`{}` is free in both `{prev}` and `{}`", f.name, s.name));
                }
            }
        }
        if self.passes == 0 {
            return fail("plan needs at least one pass".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedParam {
    pub name: String,
    pub initial: f64,
    pub value: f64,
    /// Half-width over which the stage loss rises by 5 %, from the local
    /// curvature; a rough confidence proxy in parameter units.
    pub confidence: f64,
    /// The optimum lies on a search bound.
    pub at_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub kind: StageKind,
    pub pass: usize,
    pub params: Vec<FittedParam>,
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Final relative RMS of each target dataset.
    pub per_dataset: Vec<(String, f64)>,
    pub iterations: u64,
    pub evaluations: usize,
    /// Best loss after every evaluation.
    pub loss_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitReport {
    pub stages: Vec<StageReport>,
}

impl FitReport {
    /// Final value of a parameter after the last stage that fitted it.
    pub fn fitted(&self, name: &str) -> Option<&FittedParam> {
        self.stages
            .iter()
            .rev()
            .flat_map(|s| &s.params)
            .find(|p| p.name == name)
    }
}

/// Penalty weight on the normalized distance outside the search box.
const BOUND_PENALTY: f64 = 10.0;
/// Loss assigned to parameter sets the solver cannot simulate.
const FAILED_LOSS: f64 = 10.0;

struct StageProblem<'a> {
    base: &'a ModelParams,
    free: &'a [FreeParam],
    datasets: Vec<(&'a str, &'a Dataset)>,
    solver: &'a SolverConfig,
    /// Evaluation count and best-so-far loss history.
    log: std::sync::Mutex<Vec<f64>>,
}

impl StageProblem<'_> {
    fn params_at(&self, u: &[f64]) -> ModelParams {
        let mut p = self.base.clone();
        for (f, &ui) in self.free.iter().zip(u) {
            if let Some(spec) = find_spec(&f.name) {
                (spec.set)(&mut p, f.to_value(ui));
            }
        }
        p
    }

    fn per_dataset(&self, p: &ModelParams) -> Vec<Result<f64>> {
        use rayon::prelude::*;
        self.datasets.par_iter().map(|(_, d)| d.loss(p, self.solver)).collect()
    }

    fn eval(&self, u: &[f64]) -> Result<f64> {
        let excess: f64 = u.iter().map(|&x| (x - x.clamp(0.0, 1.0)).powi(2)).sum();
        let p = self.params_at(u);
        let losses = self.per_dataset(&p);
        let mut total = 0.0;
        for (r, (name, _)) in losses.into_iter().zip(&self.datasets) {
            total += match r {
                Ok(l) if l.is_finite() => l,
                Ok(l) => {
                    return Err(Error::Fit(format!(
                        "non-finite loss {l} on dataset `{name}` at {}",
                        self.describe(&p)
                    )))
                }
                Err(_) => FAILED_LOSS,
            };
        }
        let loss = total / self.datasets.len().max(1) as f64 + BOUND_PENALTY * excess;
        let mut log = self.log.lock().unwrap_or_else(|e| e.into_inner());
        let best = log.last().map_or(loss, |&b: &f64| b.min(loss));
        log.push(best);
        Ok(loss)
    }

    fn describe(&self, p: &ModelParams) -> String {
        self.free
            .iter()
            .map(|f| {
                format!(
                    "{} = {:.6e}",
                    f.name,
                    find_spec(&f.name).map_or(f64::NAN, |s| (s.get)(p))
                )
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Borrowing adapter so one problem can serve several optimizer runs.
struct Cost<'p, 'a>(&'p StageProblem<'a>);

impl argmin::core::CostFunction for Cost<'_, '_> {
    type Param = Vec<f64>;
    type Output = f64;
    fn cost(&self, u: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        self.0.eval(u).map_err(|e| argmin::core::Error::msg(e.to_string()))
    }
}

fn simplex(center: &[f64], size: f64) -> Vec<Vec<f64>> {
    let mut pts = vec![center.to_vec()];
    for i in 0..center.len() {
        let mut p = center.to_vec();
        p[i] += if p[i] + size <= 1.0 { size } else { -size };
        pts.push(p);
    }
    pts
}

/// Fits one stage in place. The stage loss is the mean relative RMS over
/// its datasets; failed simulations count as a loss of 10.
pub fn fit_stage(
    stage: &Stage,
    datasets: &BTreeMap<String, Dataset>,
    params: &mut ModelParams,
    solver: &SolverConfig,
) -> Result<StageReport> {
    use argmin::core::{Executor, State};
    use argmin::solver::neldermead::NelderMead;

    let targets = stage
        .datasets
        .iter()
        .map(|n| {
            datasets
                .get(n)
                .map(|d| (n.as_str(), d))
                .ok_or_else(|| Error::Fit(format!("missing dataset `{n}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let problem = StageProblem {
        base: params,
        free: &stage.free,
        datasets: targets,
        solver,
        log: Default::default(),
    };
    let initial: Vec<f64> = stage
        .free
        .iter()
        .map(|f| {
            find_spec(&f.name)
                .map(|s| f.to_unit((s.get)(params)))
                .ok_or_else(|| Error::Fit(format!("unknown parameter `{}`", f.name)))
        })
        .collect::<Result<_>>()?;
    let initial_loss = problem.eval(&initial)?;
    let (mut best_u, mut best_loss) = (initial.clone(), initial_loss);
    let mut iterations = 0;
    if !stage.free.is_empty() {
        let mut size = 0.15;
        for _ in 0..=stage.restarts {
            let nm = NelderMead::new(simplex(&best_u, size))
                .with_sd_tolerance(stage.tolerance)
                .map_err(|e| Error::Fit(e.to_string()))?;
            let res = Executor::new(Cost(&problem), nm)
                .configure(|s| s.max_iters(stage.max_iters))
                .run()
                .map_err(|e| Error::Fit(format!("stage `{}` aborted: {e}", stage.name)))?;
            iterations += res.state().get_iter();
            if let Some(u) = res.state().get_best_param() {
                let l = res.state().get_best_cost();
                if l < best_loss {
                    best_u = u.clone();
                    best_loss = l;
                }
            }
            size *= 0.5;
        }
    }
    let best_u: Vec<f64> = best_u.iter().map(|u| u.clamp(0.0, 1.0)).collect();
    let fitted = problem.params_at(&best_u);

    let h = 0.01;
    let mut out = Vec::with_capacity(stage.free.len());
    for (i, f) in stage.free.iter().enumerate() {
        let at = |du: f64| {
            let mut u = best_u.clone();
            u[i] = (u[i] + du).clamp(0.0, 1.0);
            problem.eval(&u).unwrap_or(f64::INFINITY)
        };
        let curv = (at(h) + at(-h) - 2.0 * best_loss) / (h * h);
        let du = if curv > 0.0 {
            (0.1 * best_loss / curv).sqrt()
        } else {
            1.0
        };
        let (lo, hi) = (f.to_value(best_u[i] - du), f.to_value(best_u[i] + du));
        out.push(FittedParam {
            name: f.name.clone(),
            initial: find_spec(&f.name).map_or(f64::NAN, |s| (s.get)(params)),
            value: f.to_value(best_u[i]),
            confidence: 0.5 * (hi - lo),
            at_bound: best_u[i] <= 1e-6 || best_u[i] >= 1.0 - 1e-6,
        });
    }
    let per_dataset = problem
        .datasets
        .iter()
        .zip(problem.per_dataset(&fitted))
        .map(|((n, _), r)| (n.to_string(), r.unwrap_or(f64::NAN)))
        .collect();
    let loss_curve = problem.log.into_inner().unwrap_or_else(|e| e.into_inner());
    *params = fitted;
    Ok(StageReport {
        name: stage.name.clone(),
        kind: stage.kind,
        pass: 0,
        params: out,
        initial_loss,
        final_loss: best_loss,
        per_dataset,
        iterations,
        evaluations: loss_curve.len(),
        loss_curve,
    })
}

/// Runs every stage of every pass in order.
pub fn run_plan(
    plan: &CalibrationPlan,
    datasets: &BTreeMap<String, Dataset>,
    initial: &ModelParams,
) -> Result<(ModelParams, FitReport)> {
    plan.validate(datasets)?;
    let violations = initial.validate();
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    let mut params = initial.clone();
    let mut report = FitReport::default();
    for pass in 0..plan.passes {
        for s in &plan.stages {
            let mut r = fit_stage(s, datasets, &mut params, &plan.solver)?;
            r.pass = pass;
            report.stages.push(r);
        }
    }
    Ok((params, report))
}

/// Result of matching a parameter spread to measured device-to-device spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariabilityFit {
    pub parameter: String,
    /// Standard deviation in the parameter's units.
    pub sigma: f64,
    pub measured_mean: f64,
    pub measured_std: f64,
    pub model_mean: f64,
    pub model_std: f64,
    /// Relative mismatch of the model spread, `|model_std/measured_std − 1|`.
    pub residual: f64,
}

/// Memory window at the first read bias of `window` for a set of draws
/// `value0 + sigma·z_i` of `parameter`.
fn window_spread(
    params: &ModelParams,
    parameter: &str,
    sigma: f64,
    z: &[f64],
    window: &crate::transient::experiments::WindowConfig,
    solver: &SolverConfig,
) -> Result<(f64, f64)> {
    use rayon::prelude::*;
    let spec = find_spec(parameter).ok_or_else(|| Error::Fit(format!("unknown parameter `{parameter}`")))?;
    let v0 = (spec.get)(params);
    let values = z
        .par_iter()
        .map(|&zi| {
            let mut p = params.clone();
            (spec.set)(&mut p, v0 + sigma * zi);
            let w = crate::transient::experiments::memory_window(&p, window, solver)?;
            Ok(w.delta()[0])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(crate::montecarlo::mean_std(&values))
}

/// Finds σ of `parameter` such that the simulated memory-window spread
/// matches the standard deviation of `measured_windows` (fF/µm²).
///
/// The same standard-normal draws are reused at every trial σ, so the
/// simulated spread is a smooth function of σ and a secant search converges
/// in a few steps.
pub fn extract_variability(
    measured_windows: &[f64],
    params: &ModelParams,
    parameter: &str,
    window: &crate::transient::experiments::WindowConfig,
    n_samples: usize,
    seed: u64,
    solver: &SolverConfig,
) -> Result<VariabilityFit> {
    if measured_windows.len() < 2 || n_samples < 2 || window.biases.is_empty() {
        return Err(Error::Fit(
            "variability extraction needs at least two windows, samples and a read bias".into(),
        ));
    }
    let (m_mean, m_std) = crate::montecarlo::mean_std(measured_windows);
    let spec = find_spec(parameter).ok_or_else(|| Error::Fit(format!("unknown parameter `{parameter}`")))?;
    let v0 = (spec.get)(params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: Vec<f64> = (0..n_samples).map(|_| StandardNormal.sample(&mut rng)).collect();

    // Local sensitivity gives the starting guess.
    let h = 0.01 * v0.abs().max(f64::MIN_POSITIVE);
    let dw = |v: f64| -> Result<f64> {
        let mut p = params.clone();
        (spec.set)(&mut p, v);
        Ok(crate::transient::experiments::memory_window(&p, window, solver)?.delta()[0])
    };
    let slope = (dw(v0 + h)? - dw(v0 - h)?) / (2.0 * h);
    if slope == 0.0 || !slope.is_finite() {
        return Err(Error::Fit(format!("memory window is insensitive to `{parameter}`")));
    }
    let mut s1 = m_std / slope.abs();
    let mut f1 = window_spread(params, parameter, s1, &z, window, solver)?.1 - m_std;
    let mut s0 = 0.0;
    let mut f0 = -m_std;
    for _ in 0..12 {
        if f1.abs() <= 1e-4 * m_std || f1 == f0 {
            break;
        }
        let s2 = (s1 - f1 * (s1 - s0) / (f1 - f0)).max(0.0);
        s0 = s1;
        f0 = f1;
        s1 = s2;
        f1 = window_spread(params, parameter, s1, &z, window, solver)?.1 - m_std;
    }
    let (model_mean, model_std) = window_spread(params, parameter, s1, &z, window, solver)?;
    Ok(VariabilityFit {
        parameter: parameter.into(),
        sigma: s1,
        measured_mean: m_mean,
        measured_std: m_std,
        model_mean,
        model_std,
        residual: if m_std > 0.0 {
            (model_std / m_std - 1.0).abs()
        } else {
            model_std
        },
    })
}

/// Fitted power-law defect trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFit {
    pub n0: f64,
    pub gamma: f64,
    /// RMS of the natural-log residuals.
    pub rms_log: f64,
}

/// Fits `(n0, γ)` of `n_tr(n) = n_tr0·(1 + (n/n0)^γ)` to an FE defect table
/// by least squares in log density.
pub fn fit_trajectory(rows: &[crate::transient::experiments::DefectRow], n_tr0: f64) -> Result<TrajectoryFit> {
    use argmin::core::{CostFunction, Executor, State};
    use argmin::solver::neldermead::NelderMead;

    let data: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.cycles > 0.0 && r.n_tr_fe > 0.0)
        .map(|r| (r.cycles, r.n_tr_fe.ln()))
        .collect();
    if data.len() < 2 || !(n_tr0 > 0.0) {
        return Err(Error::Fit(
            "trajectory fit needs two positive rows and n_tr0 > 0".into(),
        ));
    }
    struct Traj<'a>(&'a [(f64, f64)], f64);
    impl Traj<'_> {
        fn rms(&self, x: &[f64]) -> f64 {
            let (ln_n0, gamma) = (x[0], x[1]);
            let ss: f64 = self
                .0
                .iter()
                .map(|&(n, ly)| {
                    let f = 1.0 + ((n.ln() - ln_n0) * gamma).exp();
                    (self.1.ln() + f.ln() - ly).powi(2)
                })
                .sum();
            (ss / self.0.len() as f64).sqrt()
        }
    }
    impl CostFunction for Traj<'_> {
        type Param = Vec<f64>;
        type Output = f64;
        fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
            Ok(self.rms(x))
        }
    }
    let problem = Traj(&data, n_tr0);
    let mid = data.iter().map(|d| d.0.ln()).sum::<f64>() / data.len() as f64;
    let mut best = vec![mid, 1.0];
    for scale in [2.0, 0.5, 0.1] {
        let simplex = vec![
            best.clone(),
            vec![best[0] + scale, best[1]],
            vec![best[0], best[1] + 0.2 * scale],
        ];
        let nm = NelderMead::new(simplex)
            .with_sd_tolerance(1e-12)
            .map_err(|e| Error::Fit(e.to_string()))?;
        let res = Executor::new(Traj(&data, n_tr0), nm)
            .configure(|s| s.max_iters(2000))
            .run()
            .map_err(|e| Error::Fit(e.to_string()))?;
        if let Some(p) = res.state().get_best_param() {
            best = p.clone();
        }
    }
    Ok(TrajectoryFit {
        n0: best[0].exp(),
        gamma: best[1],
        rms_log: problem.rms(&best),
    })
}
