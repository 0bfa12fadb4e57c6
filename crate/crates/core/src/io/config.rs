//! Parameter and experiment configuration files.
//!
//! The format is line oriented:
//!
//! ```text
//! # comment
//! [device]
//! t_fe = 10 nm
//! n_depl = 1.2e22 cm-3
//! [read]
//! c_bl = 10 fF
//! [window]
//! biases = 0, 0.2 V
//! ```
//!
//! A value is one or more comma-separated numbers followed by an optional
//! unit. When a unit is given it must match the key's unit; a bare number is
//! taken in that unit. Parameters may only appear in their own section.
//! `[variability]` takes parameter names and one-sigma spreads in the
//! parameter's unit.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::params::{edit_distance, find_spec, nearest_name, ModelParams, Section, PARAM_SPECS};
use crate::readout::ReadCircuitConfig;
use crate::transient::experiments::{
    CvConfig, DefectTrajectory, EnduranceConfig, EraseConfig, KineticsConfig, PundConfig, WindowConfig,
};
use crate::transient::SolverConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigErrorKind {
    Syntax(String),
    UnknownSection {
        name: String,
        suggestion: Option<String>,
    },
    UnknownKey {
        section: String,
        key: String,
        suggestion: Option<String>,
    },
    WrongSection {
        key: String,
        expected: String,
    },
    UnitMismatch {
        key: String,
        expected: String,
        found: String,
    },
    BadValue {
        key: String,
        reason: String,
    },
    Duplicate {
        key: String,
    },
}

/// Parse failure anchored to a 1-based line and column.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    pub source_name: String,
    pub line: usize,
    pub column: usize,
    pub kind: ConfigErrorKind,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: ", self.source_name, self.line, self.column)?;
        let hint = |s: &Option<String>| {
            s.as_ref()
                .map(|n| format!(" (did you mean `{n}`?)"))
                .unwrap_or_default()
        };
        match &self.kind {
            ConfigErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ConfigErrorKind::UnknownSection { name, suggestion } => {
                write!(f, "unknown section `[{name}]`{}", hint(suggestion))
            }
            ConfigErrorKind::UnknownKey {
                section,
                key,
                suggestion,
            } => {
                write!(f, "unknown key `{key}` in `[{section}]`{}", hint(suggestion))
            }
            ConfigErrorKind::WrongSection { key, expected } => {
                write!(f, "key `{key}` belongs in section `[{expected}]`")
            }
            ConfigErrorKind::UnitMismatch { key, expected, found } => {
                let e = if expected.is_empty() { "no unit" } else { expected };
                write!(f, "unit error for `{key}`: expected {e}, found `{found}`")
            }
            ConfigErrorKind::BadValue { key, reason } => {
                write!(f, "bad value for `{key}`: {reason}")
            }
            ConfigErrorKind::Duplicate { key } => write!(f, "duplicate key `{key}`"),
        }
    }
}

/// One `key = value [unit]` line.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub values: Vec<f64>,
    pub unit: Option<String>,
    pub line: usize,
    pub key_column: usize,
    pub value_column: usize,
    pub unit_column: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub source_name: String,
    /// Sections in file order with the line of their header.
    pub sections: Vec<(String, usize, Vec<Entry>)>,
}

/// Canonical spelling of a unit: ASCII micro, no carets, ASCII exponents.
pub fn normalize_unit(u: &str) -> String {
    let mut s = String::with_capacity(u.len());
    for c in u.chars() {
        match c {
            'µ' | 'μ' => s.push('u'),
            '^' | ' ' => {}
            '⁻' => s.push('-'),
            '¹' => s.push('1'),
            '²' => s.push('2'),
            '³' => s.push('3'),
            _ => s.push(c),
        }
    }
    match s.as_str() {
        "1/s" | "/s" => "s-1".into(),
        "1/cm3" | "/cm3" => "cm-3".into(),
        "1/cm2" | "/cm2" => "cm-2".into(),
        "1" => String::new(),
        _ => s,
    }
}

impl Document {
    pub fn parse(text: &str, source_name: &str) -> Result<Self, ConfigError> {
        let err = |line, column, kind| ConfigError {
            source_name: source_name.to_string(),
            line,
            column,
            kind,
        };
        let mut doc = Document {
            source_name: source_name.to_string(),
            sections: Vec::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            let trimmed = content.trim();
            if trimmed.is_empty() {
                continue;
            }
            let indent = content.len() - content.trim_start().len();
            if trimmed.starts_with('[') {
                let Some(name) = trimmed.strip_prefix('[').and_then(|r| r.strip_suffix(']')) else {
                    return Err(err(
                        line,
                        indent + 1,
                        ConfigErrorKind::Syntax("unterminated section header".into()),
                    ));
                };
                let name = name.trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                    return Err(err(
                        line,
                        indent + 2,
                        ConfigErrorKind::Syntax(format!("bad section name `{name}`")),
                    ));
                }
                doc.sections.push((name.to_string(), line, Vec::new()));
                continue;
            }
            let Some(eq) = content.find('=') else {
                return Err(err(
                    line,
                    indent + 1,
                    ConfigErrorKind::Syntax("expected `key = value`".into()),
                ));
            };
            let key = content[..eq].trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
                return Err(err(
                    line,
                    indent + 1,
                    ConfigErrorKind::Syntax(format!("bad key `{key}`")),
                ));
            }
            let Some((_, _, entries)) = doc.sections.last_mut() else {
                return Err(err(
                    line,
                    indent + 1,
                    ConfigErrorKind::Syntax("key outside of any section".into()),
                ));
            };
            let entry = parse_value(&content[eq + 1..], eq + 2, key, line, indent + 1)
                .map_err(|(col, kind)| err(line, col, kind))?;
            if entries.iter().any(|e| e.key == key) {
                return Err(err(line, indent + 1, ConfigErrorKind::Duplicate { key: key.into() }));
            }
            entries.push(entry);
        }
        Ok(doc)
    }

    pub fn section(&self, name: &str) -> Option<&[Entry]> {
        self.sections.iter().find(|s| s.0 == name).map(|s| s.2.as_slice())
    }

    fn error(&self, line: usize, column: usize, kind: ConfigErrorKind) -> ConfigError {
        ConfigError {
            source_name: self.source_name.clone(),
            line,
            column,
            kind,
        }
    }
}

/// Splits `rest` (starting at 1-based column `col0`) into numbers and a unit.
fn parse_value(
    rest: &str,
    col0: usize,
    key: &str,
    line: usize,
    key_column: usize,
) -> std::result::Result<Entry, (usize, ConfigErrorKind)> {
    let lead = rest.len() - rest.trim_start().len();
    let body = rest.trim();
    let value_column = col0 + lead;
    if body.is_empty() {
        return Err((
            value_column,
            ConfigErrorKind::Syntax(format!("missing value for `{key}`")),
        ));
    }
    let mut values = Vec::new();
    let mut unit = None;
    let mut unit_column = 0;
    let mut offset = 0;
    let parts: Vec<&str> = body.split(',').collect();
    for (k, part) in parts.iter().enumerate() {
        let pad = part.len() - part.trim_start().len();
        let col = value_column + offset + pad;
        let mut tokens = part.split_whitespace();
        let num = tokens
            .next()
            .ok_or((col, ConfigErrorKind::Syntax("empty list element".into())))?;
        let v: f64 = num.parse().map_err(|_| {
            (
                col,
                ConfigErrorKind::BadValue {
                    key: key.into(),
                    reason: format!("`{num}` is not a number"),
                },
            )
        })?;
        values.push(v);
        let tail: Vec<&str> = tokens.collect();
        if !tail.is_empty() {
            if k + 1 != parts.len() {
                return Err((
                    col,
                    ConfigErrorKind::Syntax("a unit may only follow the last value".into()),
                ));
            }
            let u = tail.join(" ");
            unit_column = value_column + offset + part.find(tail[0]).unwrap_or(0);
            unit = Some(u);
        }
        offset += part.len() + 1;
    }
    Ok(Entry {
        key: key.to_string(),
        values,
        unit,
        line,
        key_column,
        value_column,
        unit_column,
    })
}

/// Seed and size of Monte Carlo runs.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct McSettings {
    pub samples: usize,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self { samples: 1000, seed: 1 }
    }
}

/// Everything a configuration file can set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub params: ModelParams,
    pub solver: SolverConfig,
    pub cv: CvConfig,
    pub pund: PundConfig,
    pub window: WindowConfig,
    pub erase: EraseConfig,
    pub kinetics: KineticsConfig,
    pub endurance: EnduranceConfig,
    pub read: ReadCircuitConfig,
    pub montecarlo: McSettings,
}

type Setter = fn(&mut Config, &[f64]) -> std::result::Result<(), String>;
type Getter = fn(&Config) -> Vec<f64>;

/// A key of one of the experiment sections.
struct Key {
    name: &'static str,
    unit: &'static str,
    set: Setter,
    get: Getter,
}

fn one(v: &[f64]) -> std::result::Result<f64, String> {
    match v {
        [x] => Ok(*x),
        _ => Err(format!("expected one value, got {}", v.len())),
    }
}

fn count(v: &[f64]) -> std::result::Result<usize, String> {
    let x = one(v)?;
    if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
        Ok(x as usize)
    } else {
        Err(format!("expected a non-negative integer, got {x}"))
    }
}

macro_rules! real {
    ($name:literal, $unit:literal, $($f:ident).+) => {
        Key {
            name: $name,
            unit: $unit,
            set: |c, v| {
                c.$($f).+ = one(v)?;
                Ok(())
            },
            get: |c| vec![c.$($f).+],
        }
    };
}

macro_rules! integer {
    ($name:literal, $($f:ident).+) => {
        Key {
            name: $name,
            unit: "",
            set: |c, v| {
                c.$($f).+ = count(v)? as _;
                Ok(())
            },
            get: |c| vec![c.$($f).+ as f64],
        }
    };
}

macro_rules! list {
    ($name:literal, $unit:literal, $($f:ident).+) => {
        Key {
            name: $name,
            unit: $unit,
            set: |c, v| {
                c.$($f).+ = v.to_vec();
                Ok(())
            },
            get: |c| c.$($f).+.clone(),
        }
    };
}

const SOLVER_KEYS: &[Key] = &[
    real!("abs_tol", "V", solver.abs_tol),
    real!("rel_tol", "", solver.rel_tol),
    integer!("max_newton", solver.max_newton),
    real!("dt_min", "s", solver.dt_min),
    real!("dt_max", "s", solver.dt_max),
    real!("safety", "", solver.safety),
    real!("dv_max", "V", solver.dv_max),
    real!("dp_max", "", solver.dp_max),
];

const CV_KEYS: &[Key] = &[
    real!("v_min", "V", cv.v_min),
    real!("v_max", "V", cv.v_max),
    real!("v_step", "V", cv.v_step),
    real!("dwell", "s", cv.dwell),
    real!("step_time", "s", cv.step_time),
];

const PUND_KEYS: &[Key] = &[
    real!("amplitude", "V", pund.amplitude),
    real!("frequency", "Hz", pund.frequency),
    integer!("cycles", pund.cycles),
];

const WINDOW_KEYS: &[Key] = &[
    list!("biases", "V", window.biases),
    real!("erase_amplitude", "V", window.erase.amplitude),
    real!("erase_width", "s", window.erase.width),
    real!("program_amplitude", "V", window.program.amplitude),
    real!("program_width", "s", window.program.width),
    Key {
        name: "edge",
        unit: "s",
        set: |c, v| {
            c.window.erase.edge = one(v)?;
            c.window.program.edge = c.window.erase.edge;
            Ok(())
        },
        get: |c| vec![c.window.erase.edge],
    },
    Key {
        name: "settle",
        unit: "s",
        set: |c, v| {
            c.window.erase.settle = one(v)?;
            c.window.program.settle = c.window.erase.settle;
            Ok(())
        },
        get: |c| vec![c.window.erase.settle],
    },
    real!("dwell", "s", window.read.dwell),
];

const ERASE_KEYS: &[Key] = &[
    real!("v_start", "V", erase.v_start),
    real!("v_stop", "V", erase.v_stop),
    real!("v_step", "V", erase.v_step),
    real!("width", "s", erase.width),
    real!("edge", "s", erase.edge),
    real!("settle", "s", erase.settle),
    list!("read_biases", "V", erase.read_biases),
];

const KINETICS_KEYS: &[Key] = &[
    list!("amplitudes", "V", kinetics.amplitudes),
    list!("widths", "s", kinetics.widths),
];

/// Power-law trajectory coefficients; `None` when a defect table is in use.
fn power_law(c: &mut Config) -> std::result::Result<(&mut f64, &mut f64, &mut bool), String> {
    match &mut c.endurance.trajectory {
        DefectTrajectory::Power {
            n0,
            gamma,
            include_interface,
        } => Ok((n0, gamma, include_interface)),
        DefectTrajectory::Table(_) => Err("the defect trajectory is a table".into()),
    }
}

fn power_law_values(c: &Config) -> Option<(f64, f64, bool)> {
    match &c.endurance.trajectory {
        DefectTrajectory::Power {
            n0,
            gamma,
            include_interface,
        } => Some((*n0, *gamma, *include_interface)),
        DefectTrajectory::Table(_) => None,
    }
}

const ENDURANCE_KEYS: &[Key] = &[
    list!("checkpoints", "", endurance.checkpoints),
    list!("leakage_voltages", "V", endurance.leakage_voltages),
    Key {
        name: "n0",
        unit: "",
        set: |c, v| {
            *power_law(c)?.0 = one(v)?;
            Ok(())
        },
        get: |c| power_law_values(c).map(|p| p.0).into_iter().collect(),
    },
    Key {
        name: "gamma",
        unit: "",
        set: |c, v| {
            *power_law(c)?.1 = one(v)?;
            Ok(())
        },
        get: |c| power_law_values(c).map(|p| p.1).into_iter().collect(),
    },
    Key {
        name: "include_interface",
        unit: "",
        set: |c, v| {
            *power_law(c)?.2 = match count(v)? {
                0 => false,
                1 => true,
                n => return Err(format!("expected 0 or 1, got {n}")),
            };
            Ok(())
        },
        get: |c| {
            power_law_values(c)
                .map(|p| f64::from(u8::from(p.2)))
                .into_iter()
                .collect()
        },
    },
];

const READ_KEYS: &[Key] = &[
    real!("c_bl", "fF", read.c_bl),
    Key {
        name: "c_ref",
        unit: "fF",
        set: |c, v| {
            c.read.c_ref = Some(one(v)?);
            Ok(())
        },
        get: |c| c.read.c_ref.into_iter().collect(),
    },
    real!("v_read", "V", read.v_read),
    real!("t_read", "s", read.t_read),
    real!("t_rise", "s", read.t_rise),
    real!("v_cm", "V", read.v_cm),
    real!("sa_offset_sigma", "mV", read.sa_offset_sigma),
    real!("sa_threshold", "V", read.sa_threshold),
    integer!("steps", read.steps),
];

const MC_KEYS: &[Key] = &[
    integer!("samples", montecarlo.samples),
    integer!("seed", montecarlo.seed),
];

/// Experiment sections in emission order.
const EXPERIMENT_SECTIONS: &[(&str, &[Key])] = &[
    ("solver", SOLVER_KEYS),
    ("cv", CV_KEYS),
    ("pund", PUND_KEYS),
    ("window", WINDOW_KEYS),
    ("erase", ERASE_KEYS),
    ("kinetics", KINETICS_KEYS),
    ("endurance", ENDURANCE_KEYS),
    ("read", READ_KEYS),
    ("montecarlo", MC_KEYS),
];

const PARAM_SECTIONS: [Section; 3] = [Section::Device, Section::Leakage, Section::Switching];
const VARIABILITY: &str = "variability";

fn all_section_names() -> Vec<&'static str> {
    PARAM_SECTIONS
        .iter()
        .map(|s| s.name())
        .chain([VARIABILITY])
        .chain(EXPERIMENT_SECTIONS.iter().map(|s| s.0))
        .collect()
}

fn nearest<'a>(name: &str, candidates: impl IntoIterator<Item = &'a str>) -> Option<String> {
    candidates
        .into_iter()
        .map(|c| (edit_distance(name, c), c))
        .min_by_key(|(d, _)| *d)
        .filter(|(d, _)| *d <= name.len().max(3))
        .map(|(_, c)| c.to_string())
}

impl Config {
    /// Applies a parsed document on top of the defaults.
    ///
    /// Parameter bounds are not checked here; see [`parse_config`].
    pub fn from_document(doc: &Document) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        for (section, header_line, entries) in &doc.sections {
            if let Some(sec) = PARAM_SECTIONS.iter().find(|s| s.name() == section) {
                for e in entries {
                    apply_param(doc, *sec, e, &mut cfg.params)?;
                }
            } else if section == VARIABILITY {
                for e in entries {
                    apply_variability(doc, e, &mut cfg.params)?;
                }
            } else if let Some((_, keys)) = EXPERIMENT_SECTIONS.iter().find(|s| s.0 == section) {
                for e in entries {
                    apply_key(doc, section, keys, e, &mut cfg)?;
                }
            } else {
                return Err(doc.error(
                    *header_line,
                    2,
                    ConfigErrorKind::UnknownSection {
                        name: section.clone(),
                        suggestion: nearest(section, all_section_names()),
                    },
                ));
            }
        }
        Ok(cfg)
    }
}

fn check_unit(doc: &Document, e: &Entry, expected: &str) -> Result<(), ConfigError> {
    if let Some(u) = &e.unit {
        if normalize_unit(u) != normalize_unit(expected) {
            return Err(doc.error(
                e.line,
                e.unit_column,
                ConfigErrorKind::UnitMismatch {
                    key: e.key.clone(),
                    expected: expected.to_string(),
                    found: u.clone(),
                },
            ));
        }
    }
    Ok(())
}

fn bad_value(doc: &Document, e: &Entry, reason: String) -> ConfigError {
    doc.error(
        e.line,
        e.value_column,
        ConfigErrorKind::BadValue {
            key: e.key.clone(),
            reason,
        },
    )
}

fn unknown_param(doc: &Document, section: &str, e: &Entry) -> ConfigError {
    doc.error(
        e.line,
        e.key_column,
        ConfigErrorKind::UnknownKey {
            section: section.to_string(),
            key: e.key.clone(),
            suggestion: nearest_name(&e.key),
        },
    )
}

fn apply_param(doc: &Document, section: Section, e: &Entry, params: &mut ModelParams) -> Result<(), ConfigError> {
    let spec = find_spec(&e.key).ok_or_else(|| unknown_param(doc, section.name(), e))?;
    if spec.section != section {
        return Err(doc.error(
            e.line,
            e.key_column,
            ConfigErrorKind::WrongSection {
                key: e.key.clone(),
                expected: spec.section.name().to_string(),
            },
        ));
    }
    check_unit(doc, e, spec.unit.symbol())?;
    let v = one(&e.values).map_err(|r| bad_value(doc, e, r))?;
    (spec.set)(params, v);
    Ok(())
}

fn apply_variability(doc: &Document, e: &Entry, params: &mut ModelParams) -> Result<(), ConfigError> {
    let spec = find_spec(&e.key).ok_or_else(|| unknown_param(doc, VARIABILITY, e))?;
    check_unit(doc, e, spec.unit.symbol())?;
    let sigma = one(&e.values).map_err(|r| bad_value(doc, e, r))?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(bad_value(
            doc,
            e,
            format!("sigma must be finite and non-negative, got {sigma}"),
        ));
    }
    params.variability.insert(e.key.clone(), sigma);
    Ok(())
}

fn apply_key(doc: &Document, section: &str, keys: &[Key], e: &Entry, cfg: &mut Config) -> Result<(), ConfigError> {
    let Some(key) = keys.iter().find(|k| k.name == e.key) else {
        return Err(doc.error(
            e.line,
            e.key_column,
            ConfigErrorKind::UnknownKey {
                section: section.to_string(),
                key: e.key.clone(),
                suggestion: nearest(&e.key, keys.iter().map(|k| k.name)),
            },
        ));
    };
    check_unit(doc, e, key.unit)?;
    if e.values.iter().any(|v| !v.is_finite()) {
        return Err(bad_value(doc, e, "values must be finite".into()));
    }
    (key.set)(cfg, &e.values).map_err(|r| bad_value(doc, e, r))
}

/// Parses configuration text without touching the filesystem, then checks
/// parameter bounds and solver settings.
pub fn parse_str(text: &str, source_name: &str) -> Result<Config> {
    let doc = Document::parse(text, source_name)?;
    let cfg = Config::from_document(&doc)?;
    let violations = cfg.params.validate();
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    cfg.solver.validate()?;
    cfg.read.validate()?;
    Ok(cfg)
}

/// Reads and fully validates a configuration file.
pub fn parse_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)?;
    parse_str(&text, &path.display().to_string())
}

/// Shortest text that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e6).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn format_values(values: &[f64], unit: &str) -> String {
    let nums: Vec<String> = values.iter().map(|&v| format_number(v)).collect();
    let mut s = nums.join(", ");
    if !unit.is_empty() {
        s.push(' ');
        s.push_str(unit);
    }
    s
}

/// Parameter sections (and variability, when present) in canonical form.
///
/// Values use the shortest representation that parses back to the same
/// `f64`, so `parse_str(&emit_params(p))` reproduces `p` exactly.
pub fn emit_params(params: &ModelParams) -> String {
    let mut out = String::new();
    for (i, sec) in PARAM_SECTIONS.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("[{}]\n", sec.name()));
        for spec in PARAM_SPECS.iter().filter(|s| s.section == *sec) {
            let line = format_values(&[(spec.get)(params)], spec.unit.symbol());
            out.push_str(&format!("{} = {}\n", spec.name, line));
        }
    }
    if !params.variability.is_empty() {
        out.push_str(&format!("\n[{VARIABILITY}]\n"));
        for (name, sigma) in &params.variability {
            let unit = find_spec(name).map(|s| s.unit.symbol()).unwrap_or("");
            out.push_str(&format!("{name} = {}\n", format_values(&[*sigma], unit)));
        }
    }
    out
}

/// The whole resolved configuration in canonical form.
pub fn emit_config(cfg: &Config) -> String {
    let mut out = emit_params(&cfg.params);
    for (name, keys) in EXPERIMENT_SECTIONS {
        out.push_str(&format!("\n[{name}]\n"));
        for k in keys.iter() {
            let v = (k.get)(cfg);
            if !v.is_empty() {
                out.push_str(&format!("{} = {}\n", k.name, format_values(&v, k.unit)));
            }
        }
    }
    out
}
