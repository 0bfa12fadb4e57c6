//! Measurement files for calibration.
//!
//! A data directory holds one CSV per dataset. The file stem names the
//! dataset and selects its kind:
//!
//! | stem | columns |
//! |---|---|
//! | `cv*` | `up [1]`, `v [V]`, `c [fF/um2]` |
//! | `pv*` | `branch [1]`, `v [V]`, `p [uC/cm2]` |
//! | `leakage_fe*`, `leakage_int*` | `v [V]`, `j [A/cm2]` |
//! | `kinetics*` | `amplitude [V]`, `width [s]`, `switched [1]` |
//!
//! Kinetics amplitudes are signed: positive pulses switch towards the down
//! state, negative ones towards the up state.
//!
//! Protocol settings that are not in the file (C–V staircase, PUND timing)
//! come from the run configuration.

use std::collections::BTreeMap;
use std::path::Path;

use crate::calibration::{CvDatum, Dataset, KineticsDatum, Layer, LeakageDatum, PvDatum};
use crate::error::{Error, Result};
use crate::io::config::Config;
use crate::io::table::Table;
use crate::transient::experiments::{DefectRow, KineticsTarget, WritePulse};

pub fn dataset_table(d: &Dataset) -> Table {
    match d {
        Dataset::Cv { points, .. } => Table::new()
            .with("up", "1", points.iter().map(|p| f64::from(u8::from(p.up))).collect())
            .with("v", "V", points.iter().map(|p| p.v).collect())
            .with("c", "fF/um2", points.iter().map(|p| p.c).collect()),
        Dataset::Pv { points, .. } => Table::new()
            .with("branch", "1", points.iter().map(|p| p.branch as f64).collect())
            .with("v", "V", points.iter().map(|p| p.v).collect())
            .with("p", "uC/cm2", points.iter().map(|p| p.p).collect()),
        Dataset::Leakage { points, .. } => Table::new().with("v", "V", points.iter().map(|p| p.v).collect()).with(
            "j",
            "A/cm2",
            points.iter().map(|p| p.j).collect(),
        ),
        Dataset::Kinetics { target, points, .. } => {
            let sign = match target {
                KineticsTarget::Down => 1.0,
                KineticsTarget::Up => -1.0,
            };
            Table::new()
                .with(
                    "amplitude",
                    "V",
                    points.iter().map(|p| sign * p.amplitude.abs()).collect(),
                )
                .with("width", "s", points.iter().map(|p| p.width).collect())
                .with("switched", "1", points.iter().map(|p| p.switched).collect())
        }
    }
}

fn flag(x: f64, name: &str) -> Result<bool> {
    match x {
        0.0 => Ok(false),
        1.0 => Ok(true),
        _ => Err(Error::Data(format!("`{name}` must be 0 or 1, got {x}"))),
    }
}

/// Builds the dataset called `name` from its table.
pub fn dataset_from_table(name: &str, t: &Table, cfg: &Config) -> Result<Dataset> {
    if name.starts_with("cv") {
        let (up, v, c) = (t.require("up", "1")?, t.require("v", "V")?, t.require("c", "fF/um2")?);
        let points = (0..t.rows())
            .map(|i| {
                Ok(CvDatum {
                    up: flag(up[i], "up")?,
                    v: v[i],
                    c: c[i],
                })
            })
            .collect::<Result<_>>()?;
        Ok(Dataset::Cv { config: cfg.cv, points })
    } else if name.starts_with("pv") {
        let (b, v, p) = (
            t.require("branch", "1")?,
            t.require("v", "V")?,
            t.require("p", "uC/cm2")?,
        );
        let points = (0..t.rows())
            .map(|i| {
                if !(0.0..4.0).contains(&b[i]) || b[i].fract() != 0.0 {
                    return Err(Error::Data(format!("`branch` must be 0..=3, got {}", b[i])));
                }
                Ok(PvDatum {
                    branch: b[i] as usize,
                    v: v[i],
                    p: p[i],
                })
            })
            .collect::<Result<_>>()?;
        Ok(Dataset::Pv {
            config: cfg.pund,
            points,
        })
    } else if let Some(rest) = name.strip_prefix("leakage_") {
        let layer = if rest.starts_with("fe") {
            Layer::Fe
        } else if rest.starts_with("int") {
            Layer::Int
        } else {
            return Err(Error::Data(format!(
                "leakage dataset `{name}` must be `leakage_fe*` or `leakage_int*`"
            )));
        };
        let (v, j) = (t.require("v", "V")?, t.require("j", "A/cm2")?);
        let points = v.iter().zip(j).map(|(&v, &j)| LeakageDatum { v, j }).collect();
        Ok(Dataset::Leakage { layer, points })
    } else if name.starts_with("kinetics") {
        let (a, w, s) = (
            t.require("amplitude", "V")?,
            t.require("width", "s")?,
            t.require("switched", "1")?,
        );
        let target = if a.iter().all(|&x| x > 0.0) {
            KineticsTarget::Down
        } else if a.iter().all(|&x| x < 0.0) {
            KineticsTarget::Up
        } else {
            return Err(Error::Data("kinetics amplitudes must share one sign".into()));
        };
        let reset = match target {
            KineticsTarget::Down => WritePulse::program(),
            KineticsTarget::Up => WritePulse::erase(),
        };
        let points = (0..t.rows())
            .map(|i| KineticsDatum {
                amplitude: a[i].abs(),
                width: w[i],
                switched: s[i],
            })
            .collect();
        Ok(Dataset::Kinetics { target, reset, points })
    } else {
        Err(Error::Data(format!(
            "cannot infer the kind of dataset `{name}` from its name"
        )))
    }
}

/// Every `*.csv` in `dir`, keyed by file stem.
pub fn load_datasets(dir: &Path, cfg: &Config) -> Result<BTreeMap<String, Dataset>> {
    let mut out = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::Data(format!("{}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        let Some(name) = path.file_stem().and_then(|s| s.to_str()).map(str::to_string) else {
            continue;
        };
        let t = Table::read(&path, &[])?;
        let d = dataset_from_table(&name, &t, cfg).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        out.insert(name, d);
    }
    if out.is_empty() {
        return Err(Error::Data(format!("no CSV datasets in {}", dir.display())));
    }
    Ok(out)
}

/// Writes each dataset to `dir/<name>.csv`; returns the paths written.
pub fn write_datasets(dir: &Path, datasets: &BTreeMap<String, Dataset>) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    datasets
        .iter()
        .map(|(name, d)| {
            let path = dir.join(format!("{name}.csv"));
            dataset_table(d).write(&path)?;
            Ok(path)
        })
        .collect()
}

/// Defect-density table for endurance runs: `cycles [1]`, `n_tr_fe [cm-3]`
/// and optionally `n_tr_int [cm-3]`, sorted by cycles on return.
pub fn defect_rows(t: &Table) -> Result<Vec<DefectRow>> {
    let cycles = t.require("cycles", "1")?;
    let fe = t.require("n_tr_fe", "cm-3")?;
    let int = match t.column("n_tr_int") {
        Some(_) => Some(t.require("n_tr_int", "cm-3")?),
        None => None,
    };
    let mut rows: Vec<DefectRow> = (0..t.rows())
        .map(|i| DefectRow {
            cycles: cycles[i],
            n_tr_fe: fe[i],
            n_tr_int: int.map(|c| c[i]),
        })
        .collect();
    if rows
        .iter()
        .any(|r| !(r.cycles >= 0.0 && r.n_tr_fe >= 0.0 && r.n_tr_int.unwrap_or(0.0) >= 0.0))
    {
        return Err(Error::Data("defect table entries must be non-negative".into()));
    }
    rows.sort_by(|a, b| a.cycles.total_cmp(&b.cycles));
    Ok(rows)
}
