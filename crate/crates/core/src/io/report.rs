//! Tabular views of experiment results for CSV emission.

use crate::io::table::Table;
use crate::leakage::LeakagePoint;
use crate::montecarlo::McReport;
use crate::params::find_spec;
use crate::readout::{DegradationSweep, ReadYield};
use crate::transient::experiments::{CvCurve, EnduranceRow, EraseRow, KineticsPoint, PundResult};

fn at(prefix: &str, v: f64) -> String {
    format!("{prefix}@{v:.3}")
}

pub fn leakage_table(points: &[LeakagePoint]) -> Table {
    Table::new()
        .with("v", "V", points.iter().map(|p| p.v).collect())
        .with("j_fe", "A/cm2", points.iter().map(|p| p.j_fe).collect())
        .with("j_int", "A/cm2", points.iter().map(|p| p.j_int).collect())
        .with("x_tm", "nm", points.iter().map(|p| p.x_tm).collect())
        .with("tau_c_inv", "s-1", points.iter().map(|p| p.tau_c_inv).collect())
}

/// Both sweep directions, the up branch first; `up` is 1 on the increasing branch.
pub fn cv_table(curve: &CvCurve) -> Table {
    let pts: Vec<_> = curve
        .up
        .iter()
        .map(|p| (1.0, p))
        .chain(curve.down.iter().map(|p| (0.0, p)))
        .collect();
    Table::new()
        .with("up", "1", pts.iter().map(|x| x.0).collect())
        .with("v", "V", pts.iter().map(|x| x.1.v).collect())
        .with("c", "fF/um2", pts.iter().map(|x| x.1.c).collect())
        .with("p", "1", pts.iter().map(|x| x.1.p).collect())
        .with("q_trap_dyn", "C/m2", pts.iter().map(|x| x.1.q_trap_dyn).collect())
}

pub fn pv_table(r: &PundResult) -> Table {
    Table::new()
        .with("v", "V", r.loop_points.iter().map(|p| p.v).collect())
        .with("p", "uC/cm2", r.loop_points.iter().map(|p| p.p).collect())
}

pub fn kinetics_table(points: &[KineticsPoint]) -> Table {
    Table::new()
        .with("amplitude", "V", points.iter().map(|p| p.amplitude).collect())
        .with("width", "s", points.iter().map(|p| p.width).collect())
        .with("p", "1", points.iter().map(|p| p.p).collect())
        .with("switched", "1", points.iter().map(|p| p.switched).collect())
}

pub fn erase_table(rows: &[EraseRow], read_biases: &[f64]) -> Table {
    let mut t = Table::new()
        .with("amplitude", "V", rows.iter().map(|r| r.amplitude).collect())
        .with("p", "1", rows.iter().map(|r| r.p).collect());
    for (k, &b) in read_biases.iter().enumerate() {
        t.push(&at("c", b), "fF/um2", rows.iter().map(|r| r.c[k]).collect());
    }
    t
}

pub fn endurance_table(rows: &[EnduranceRow], leakage_voltages: &[f64]) -> Table {
    let mut t = Table::new()
        .with("cycles", "1", rows.iter().map(|r| r.cycles).collect())
        .with("n_tr_fe", "cm-3", rows.iter().map(|r| r.n_tr_fe).collect())
        .with("n_tr_int", "cm-3", rows.iter().map(|r| r.n_tr_int).collect())
        .with("p_hcs", "1", rows.iter().map(|r| r.window.p_hcs).collect())
        .with("p_lcs", "1", rows.iter().map(|r| r.window.p_lcs).collect());
    if let Some(first) = rows.first() {
        for (k, &b) in first.window.biases.iter().enumerate() {
            t.push(
                &at("c_hcs", b),
                "fF/um2",
                rows.iter().map(|r| r.window.c_hcs[k]).collect(),
            );
            t.push(
                &at("c_lcs", b),
                "fF/um2",
                rows.iter().map(|r| r.window.c_lcs[k]).collect(),
            );
        }
    }
    for (k, &v) in leakage_voltages.iter().enumerate() {
        t.push(&at("j_fe", v), "A/cm2", rows.iter().map(|r| r.j_fe[k]).collect());
        t.push(&at("j_int", v), "A/cm2", rows.iter().map(|r| r.j_int[k]).collect());
    }
    t
}

pub fn degradation_table(sweep: &DegradationSweep) -> Table {
    let p = &sweep.points;
    let unit = sweep.axis.density_unit();
    Table::new()
        .with("density", unit, p.iter().map(|x| x.density).collect())
        .with("v_tracked", "mV", p.iter().map(|x| x.v_tracked).collect())
        .with("v_other", "mV", p.iter().map(|x| x.v_other).collect())
        .with("separation", "mV", p.iter().map(|x| x.separation).collect())
        .with("margin", "mV", p.iter().map(|x| x.margin).collect())
        .with("delta_c", "fF/um2", p.iter().map(|x| x.delta_c).collect())
        .with("c_ref", "fF", p.iter().map(|x| x.c_ref).collect())
}

/// Unit of a Monte Carlo scalar, inferred from its name.
pub fn mc_unit(name: &str) -> &'static str {
    let prefix = name.split('@').next().unwrap_or(name);
    match prefix {
        "up" | "down" | "c" | "c_hcs" | "c_lcs" | "delta" => "fF/um2",
        "v_hcs" | "v_lcs" | "offset" => "mV",
        "p" | "bit1_ok" | "bit0_ok" => "1",
        _ => find_spec(prefix).map_or("", |s| match s.unit.symbol() {
            "" => "1",
            u => u,
        }),
    }
}

/// One row per successful sample.
pub fn mc_table(r: &McReport) -> Table {
    let mut t = Table::new().with("index", "1", r.samples.iter().map(|s| s.index as f64).collect());
    for (k, name) in r.names.iter().enumerate() {
        t.push(name, mc_unit(name), r.samples.iter().map(|s| s.values[k]).collect());
    }
    t.push(
        "pass",
        "1",
        r.samples.iter().map(|s| f64::from(u8::from(s.pass))).collect(),
    );
    t
}

/// Mean, standard deviation and 3σ band of every scalar. Scalars named
/// `prefix@x` also get their abscissa in column `x`.
pub fn mc_summary_table(r: &McReport) -> Table {
    let mut names = Vec::new();
    let x: Vec<f64> = r
        .summary
        .iter()
        .map(|s| {
            names.push(s.name.clone());
            s.name
                .split_once('@')
                .and_then(|(_, v)| v.parse().ok())
                .unwrap_or(f64::NAN)
        })
        .collect();
    let mut t = Table::new()
        .with("x", "", x)
        .with("mean", "", r.summary.iter().map(|s| s.mean).collect())
        .with("std", "", r.summary.iter().map(|s| s.std).collect())
        .with("lo_3sigma", "", r.summary.iter().map(|s| s.lo_3sigma).collect())
        .with("hi_3sigma", "", r.summary.iter().map(|s| s.hi_3sigma).collect());
    t.push_text("name", names);
    t
}

/// BL voltage histograms of both states on a shared bin grid.
pub fn bl_histogram_table(y: &ReadYield, bins: usize) -> Table {
    let hcs = y.report.column("v_hcs").unwrap_or_default();
    let lcs = y.report.column("v_lcs").unwrap_or_default();
    let all: Vec<f64> = hcs.iter().chain(&lcs).copied().collect();
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bins = bins.max(1);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let count = |v: &[f64]| {
        let mut c = vec![0.0; bins];
        for &x in v {
            let k = (((x - lo) / width) as usize).min(bins - 1);
            c[k] += 1.0;
        }
        c
    };
    Table::new()
        .with("v_bl", "mV", (0..bins).map(|k| lo + (k as f64 + 0.5) * width).collect())
        .with("hcs", "1", count(&hcs))
        .with("lcs", "1", count(&lcs))
}
