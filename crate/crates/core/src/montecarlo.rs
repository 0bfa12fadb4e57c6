//! Monte Carlo over device-to-device parameter variability.
//!
//! Every sample owns a ChaCha stream selected by `(seed, index)`, so a report
//! does not depend on how samples are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{find_spec, Bound, ModelParams};

/// Largest tolerated fraction of failed samples.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

const MAX_REJECTIONS: usize = 10_000;

/// Random stream of one sample.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Normal draw rejected until it lies inside the parameter's physical range.
fn truncated_normal(rng: &mut ChaCha8Rng, mean: f64, sigma: f64, bound: Bound) -> f64 {
    if sigma == 0.0 {
        return mean;
    }
    let (lo, hi) = (bound.lower(), bound.upper());
    for _ in 0..MAX_REJECTIONS {
        let z: f64 = StandardNormal.sample(rng);
        let v = mean + sigma * z;
        if bound.admits(v) && v >= lo && v <= hi {
            return v;
        }
    }
    mean
}

/// Draws one device from the variability table of `base`.
///
/// Parameters are visited in name order so the draw sequence is stable. The
/// returned set has an empty variability table.
pub fn draw_params(base: &ModelParams, rng: &mut ChaCha8Rng) -> ModelParams {
    let mut p = base.clone();
    for (name, &sigma) in &base.variability {
        if let Some(spec) = find_spec(name) {
            let v = truncated_normal(rng, (spec.get)(base), sigma, spec.bound);
            (spec.set)(&mut p, v);
        }
    }
    p.variability.clear();
    p
}

/// A per-device experiment reduced to named scalars.
pub trait McExperiment: Sync {
    fn name(&self) -> &str;
    fn scalar_names(&self) -> Vec<String>;
    /// Runs one device. `rng` is the sample's stream after the parameter
    /// draws, for experiments with their own random inputs.
    fn evaluate(&self, params: &ModelParams, rng: &mut ChaCha8Rng) -> Result<Vec<f64>>;
    /// Predicate counted by the report's yield.
    fn pass(&self, _scalars: &[f64]) -> bool {
        true
    }
}

/// Reports the drawn parameter values themselves.
#[derive(Debug, Clone)]
pub struct DrawnParameters {
    pub names: Vec<String>,
}

impl DrawnParameters {
    pub fn varied(params: &ModelParams) -> Self {
        Self {
            names: params.variability.keys().cloned().collect(),
        }
    }
}

impl McExperiment for DrawnParameters {
    fn name(&self) -> &str {
        "params"
    }
    fn scalar_names(&self) -> Vec<String> {
        self.names.clone()
    }
    fn evaluate(&self, params: &ModelParams, _rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        self.names
            .iter()
            .map(|n| {
                find_spec(n)
                    .map(|s| (s.get)(params))
                    .ok_or_else(|| Error::MonteCarlo(format!("unknown parameter `{n}`")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarSummary {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    /// Empirical 0.135 % quantile (lower edge of the 3σ band).
    pub lo_3sigma: f64,
    /// Empirical 99.865 % quantile.
    pub hi_3sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSample {
    pub index: usize,
    pub values: Vec<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub experiment: String,
    pub seed: u64,
    pub n_samples: usize,
    pub names: Vec<String>,
    /// Successful samples in index order.
    pub samples: Vec<McSample>,
    /// Failed sample indices with their error messages.
    pub failures: Vec<(usize, String)>,
    pub summary: Vec<ScalarSummary>,
    /// Fraction of successful samples satisfying the experiment predicate.
    pub yield_fraction: f64,
}

impl McReport {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.names.iter().position(|n| n == name)?;
        Some(self.samples.iter().map(|s| s.values[k]).collect())
    }

    pub fn summary_of(&self, name: &str) -> Option<&ScalarSummary> {
        self.summary.iter().find(|s| s.name == name)
    }
}

/// Linear-interpolated empirical quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = h.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (h - i as f64) * (sorted[j] - sorted[i])
}

/// Mean and sample standard deviation.
pub fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn summarize(name: &str, values: &[f64]) -> ScalarSummary {
    let (mean, std) = mean_std(values);
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    ScalarSummary {
        name: name.to_string(),
        mean,
        std,
        lo_3sigma: quantile(&sorted, 0.00135),
        hi_3sigma: quantile(&sorted, 0.99865),
    }
}

/// Runs `experiment` on `n_samples` devices drawn from `params`.
pub fn run_mc(experiment: &dyn McExperiment, params: &ModelParams, n_samples: usize, seed: u64) -> Result<McReport> {
    if n_samples < 2 {
        return Err(Error::MonteCarlo(format!("need at least 2 samples, got {n_samples}")));
    }
    let violations = params.validate();
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    let names = experiment.scalar_names();
    let outcomes: Vec<(usize, Result<Vec<f64>>)> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i as u64);
            let p = draw_params(params, &mut rng);
            (i, experiment.evaluate(&p, &mut rng))
        })
        .collect();

    let mut samples = Vec::with_capacity(n_samples);
    let mut failures = Vec::new();
    for (index, r) in outcomes {
        match r {
            Ok(values) if values.len() == names.len() && values.iter().all(|v| v.is_finite()) => {
                let pass = experiment.pass(&values);
                samples.push(McSample { index, values, pass });
            }
            Ok(values) => failures.push((index, format!("bad scalar vector {values:?}"))),
            Err(e) => failures.push((index, e.to_string())),
        }
    }
    if failures.len() as f64 > MAX_FAILURE_FRACTION * n_samples as f64 {
        return Err(Error::MonteCarlo(format!(
            "{} of {n_samples} samples failed; first: sample {} ({})",
            failures.len(),
            failures[0].0,
            failures[0].1
        )));
    }
    let summary = names
        .iter()
        .enumerate()
        .map(|(k, n)| summarize(n, &samples.iter().map(|s| s.values[k]).collect::<Vec<_>>()))
        .collect();
    let passed = samples.iter().filter(|s| s.pass).count();
    Ok(McReport {
        experiment: experiment.name().to_string(),
        seed,
        n_samples,
        names,
        yield_fraction: if samples.is_empty() {
            0.0
        } else {
            passed as f64 / samples.len() as f64
        },
        samples,
        failures,
        summary,
    })
}

/// Formats a voltage for use in a scalar name.
fn at(prefix: &str, v: f64) -> String {
    format!("{prefix}@{v:.3}")
}

/// C–V loop; scalars are the capacitance of both branches at every level.
#[derive(Debug, Clone)]
pub struct CvSpread {
    pub cv: crate::transient::experiments::CvConfig,
    pub solver: crate::transient::SolverConfig,
}

impl CvSpread {
    pub fn levels(&self) -> Vec<f64> {
        self.cv.levels()
    }
}

impl McExperiment for CvSpread {
    fn name(&self) -> &str {
        "cv"
    }
    fn scalar_names(&self) -> Vec<String> {
        let l = self.levels();
        l.iter()
            .map(|&v| at("up", v))
            .chain(l.iter().map(|&v| at("down", v)))
            .collect()
    }
    fn evaluate(&self, params: &ModelParams, _rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let curve = crate::transient::experiments::experiment_cv(params, &self.cv, &self.solver)?;
        let mut down = curve.down;
        down.reverse();
        Ok(curve.up.iter().chain(&down).map(|p| p.c).collect())
    }
}

/// Memory window at each read bias.
#[derive(Debug, Clone)]
pub struct WindowSpread {
    pub window: crate::transient::experiments::WindowConfig,
    pub solver: crate::transient::SolverConfig,
}

impl McExperiment for WindowSpread {
    fn name(&self) -> &str {
        "window"
    }
    fn scalar_names(&self) -> Vec<String> {
        let b = &self.window.biases;
        ["c_hcs", "c_lcs", "delta"]
            .iter()
            .flat_map(|p| b.iter().map(move |&v| at(p, v)))
            .collect()
    }
    fn evaluate(&self, params: &ModelParams, _rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let w = crate::transient::experiments::memory_window(params, &self.window, &self.solver)?;
        let d = w.delta();
        Ok(w.c_hcs.into_iter().chain(w.c_lcs).chain(d).collect())
    }
}

/// Gradual erase staircase; scalars are the capacitance at the first read
/// bias and the polarization fraction after each erase amplitude.
#[derive(Debug, Clone)]
pub struct EraseSpread {
    pub erase: crate::transient::experiments::EraseConfig,
    pub solver: crate::transient::SolverConfig,
}

impl McExperiment for EraseSpread {
    fn name(&self) -> &str {
        "erase"
    }
    fn scalar_names(&self) -> Vec<String> {
        let a = self.erase.amplitudes();
        a.iter()
            .map(|&v| at("c", v))
            .chain(a.iter().map(|&v| at("p", v)))
            .collect()
    }
    fn evaluate(&self, params: &ModelParams, _rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let rows = crate::transient::experiments::experiment_erase_staircase(params, &self.erase, &self.solver)?;
        let c = rows.iter().map(|r| r.c.first().copied().unwrap_or(f64::NAN));
        let p = rows.iter().map(|r| r.p);
        Ok(c.chain(p).collect())
    }
}
