//! Standalone matplotlib scripts that redraw a result from its CSV files.
//!
//! Nothing is rendered in-process; the scripts are artifacts to run later
//! with `python3 <script>`.

use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    /// C–V hysteresis, both sweep directions.
    Cv,
    /// P–V loop.
    Pv,
    /// Switched fraction against pulse width, one curve per amplitude.
    Kinetics,
    /// Capacitance and polarization after each erase amplitude.
    Erase,
    /// Window and leakage against cycle count.
    Endurance,
    /// Leakage current density of both layers.
    Leakage,
    /// Mean and 3σ band of Monte Carlo C–V scalars.
    McBands,
    /// Bit-line voltage histograms of both states.
    BlHistogram,
    /// BL signal and window against defect density.
    Degradation,
    /// Any transient trace.
    Trace,
}

impl FigureKind {
    pub fn name(self) -> &'static str {
        match self {
            FigureKind::Cv => "cv",
            FigureKind::Pv => "pv",
            FigureKind::Kinetics => "kinetics",
            FigureKind::Erase => "erase",
            FigureKind::Endurance => "endurance",
            FigureKind::Leakage => "leakage",
            FigureKind::McBands => "mc_bands",
            FigureKind::BlHistogram => "bl_histogram",
            FigureKind::Degradation => "degradation",
            FigureKind::Trace => "trace",
        }
    }
}

const PRELUDE: &str = r#"#!/usr/bin/env python3
import csv
import os
import sys

import matplotlib

if "DISPLAY" not in os.environ:
    matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def load(name):
    """Columns keyed by name without the unit suffix; text stays text."""
    with open(os.path.join(HERE, name), newline="") as f:
        rows = list(csv.reader(f))
    out = {}
    for k, head in enumerate(rows[0]):
        key = head.split(" [")[0]
        col = [r[k] for r in rows[1:]]
        try:
            out[key] = [float(x) for x in col]
        except ValueError:
            out[key] = col
    return out


def finish(fig, stem):
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, stem + ".png"), dpi=150)
    if "--show" in sys.argv:
        plt.show()

"#;

fn body(kind: FigureKind) -> &'static str {
    match kind {
        FigureKind::Cv => {
            r#"
fig, ax = plt.subplots(figsize=(5, 4))
for path in FILES:
    d = load(path)
    for flag, style, label in ((1.0, "-", "up sweep"), (0.0, "--", "down sweep")):
        idx = [i for i, u in enumerate(d["up"]) if u == flag]
        ax.plot([d["v"][i] for i in idx], [d["c"][i] for i in idx], style, label=label)
ax.set_xlabel("Voltage (V)")
ax.set_ylabel("Capacitance (fF/µm²)")
ax.legend()
"#
        }
        FigureKind::Pv => {
            r#"
fig, ax = plt.subplots(figsize=(5, 4))
for path in FILES:
    d = load(path)
    ax.plot(d["v"], d["p"], label=path)
ax.set_xlabel("Voltage (V)")
ax.set_ylabel("Polarization (µC/cm²)")
ax.axhline(0, color="0.7", lw=0.5)
ax.axvline(0, color="0.7", lw=0.5)
"#
        }
        FigureKind::Kinetics => {
            r#"
fig, ax = plt.subplots(figsize=(5, 4))
for path in FILES:
    d = load(path)
    for a in sorted(set(d["amplitude"])):
        idx = [i for i, x in enumerate(d["amplitude"]) if x == a]
        ax.plot([d["width"][i] for i in idx], [d["switched"][i] for i in idx], "o-", ms=3, label=f"{a:g} V")
ax.set_xscale("log")
ax.set_xlabel("Pulse width (s)")
ax.set_ylabel("Switched fraction")
ax.set_ylim(-0.05, 1.05)
ax.legend()
"#
        }
        FigureKind::Erase => {
            r#"
fig, (ax, axp) = plt.subplots(1, 2, figsize=(9, 4))
for path in FILES:
    d = load(path)
    for key in d:
        if key.startswith("c@"):
            ax.plot(d["amplitude"], d[key], "o-", label="read at " + key[2:] + " V")
    axp.plot(d["amplitude"], d["p"], "o-")
ax.set_xlabel("Erase amplitude (V)")
ax.set_ylabel("Capacitance (fF/µm²)")
ax.legend()
axp.set_xlabel("Erase amplitude (V)")
axp.set_ylabel("Down-polarized fraction")
"#
        }
        FigureKind::Endurance => {
            r#"
fig, (ax, axj) = plt.subplots(1, 2, figsize=(9, 4))
for path in FILES:
    d = load(path)
    for key in d:
        if key.startswith("c_hcs@"):
            bias = key.split("@")[1]
            delta = [h - l for h, l in zip(d[key], d["c_lcs@" + bias])]
            ax.plot(d["cycles"], delta, "o-", label="ΔC at " + bias + " V")
        if key.startswith("j_fe@") or key.startswith("j_int@"):
            axj.plot(d["cycles"], [abs(x) for x in d[key]], "o-", label=key)
for a in (ax, axj):
    a.set_xscale("log")
    a.set_xlabel("Cycles")
    a.legend()
ax.set_ylabel("Memory window (fF/µm²)")
axj.set_yscale("log")
axj.set_ylabel("|J| (A/cm²)")
"#
        }
        FigureKind::Leakage => {
            r#"
fig, ax = plt.subplots(figsize=(5, 4))
for path in FILES:
    d = load(path)
    ax.plot(d["v"], [abs(x) for x in d["j_fe"]], label="ferroelectric")
    ax.plot(d["v"], [abs(x) for x in d["j_int"]], label="interface")
ax.set_yscale("log")
ax.set_xlabel("Layer voltage (V)")
ax.set_ylabel("|J| (A/cm²)")
ax.legend()
"#
        }
        FigureKind::McBands => {
            r#"
fig, ax = plt.subplots(figsize=(5, 4))
for path in FILES:
    d = load(path)
    for prefix in ("up", "down", "c_hcs", "c_lcs", "c"):
        idx = [i for i, n in enumerate(d["name"]) if n.split("@")[0] == prefix]
        if not idx:
            continue
        idx.sort(key=lambda i: d["x"][i])
        x = [d["x"][i] for i in idx]
        line, = ax.plot(x, [d["mean"][i] for i in idx], label=prefix)
        ax.fill_between(x, [d["lo_3sigma"][i] for i in idx], [d["hi_3sigma"][i] for i in idx],
                        color=line.get_color(), alpha=0.25)
ax.set_xlabel("Voltage (V)")
ax.set_ylabel("Capacitance (fF/µm²), mean and 3σ")
ax.legend()
"#
        }
        FigureKind::BlHistogram => {
            r#"
fig, ax = plt.subplots(figsize=(5, 4))
for path in FILES:
    d = load(path)
    w = d["v_bl"][1] - d["v_bl"][0] if len(d["v_bl"]) > 1 else 1.0
    ax.bar(d["v_bl"], d["hcs"], width=w, alpha=0.6, label="HCS")
    ax.bar(d["v_bl"], d["lcs"], width=w, alpha=0.6, label="LCS")
ax.set_xlabel("Bit-line voltage (mV)")
ax.set_ylabel("Count")
ax.legend()
"#
        }
        FigureKind::Degradation => {
            r#"
fig, (ax, axc) = plt.subplots(1, 2, figsize=(9, 4))
for path in FILES:
    d = load(path)
    ax.plot(d["density"], d["separation"], "o-", label=path)
    axc.plot(d["density"], d["delta_c"], "o-", label=path)
for a in (ax, axc):
    a.set_xscale("symlog" if min(d["density"]) <= 0 else "log")
    a.set_xlabel("Defect density")
    a.legend()
ax.set_ylabel("BL signal (mV)")
axc.set_ylabel("ΔC at 0 V (fF/µm²)")
"#
        }
        FigureKind::Trace => {
            r#"
fig, (ax, axi) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
for path in FILES:
    d = load(path)
    for key in ("v_applied", "v_fe", "v_int", "v_depl"):
        ax.plot(d["t"], d[key], label=key)
    axi.plot(d["t"], d["i_total"], label="i_total")
ax.set_ylabel("Voltage (V)")
ax.legend()
axi.set_xlabel("Time (s)")
axi.set_ylabel("Current (A)")
"#
        }
    }
}

/// Script text for `kind` reading `csv_paths`, which are resolved relative
/// to the directory the script is saved in.
pub fn emit_plot_script(kind: FigureKind, csv_paths: &[&Path]) -> String {
    let files: Vec<String> = csv_paths.iter().map(|p| format!("{:?}", p.to_string_lossy())).collect();
    format!(
        "{PRELUDE}\nFILES = [{}]\n{}\nfinish(fig, {:?})\n",
        files.join(", "),
        body(kind),
        kind.name()
    )
}
