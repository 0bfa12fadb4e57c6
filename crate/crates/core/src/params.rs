//! Model parameters, their registry (names, units, bounds) and validation.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constants::{EPS_0, NM, PER_CM2, PER_CM3, Q, UC_PER_CM2, UM2};

/// Phenomenological polarization switching law parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchingParams {
    /// Attempt time, s.
    pub tau_0: f64,
    /// Merz activation field, V/m.
    pub e_a: f64,
    /// Merz exponent.
    pub beta: f64,
    /// Width of the equilibrium logistic, as a fraction of the coercive field.
    pub lorentz_width: f64,
    /// Coercive voltage across the ferroelectric towards the down state, V.
    pub v_c_pos: f64,
    /// Coercive voltage across the ferroelectric towards the up state, V.
    pub v_c_neg: f64,
}

impl Default for SwitchingParams {
    fn default() -> Self {
        Self {
            tau_0: 5e-7,
            e_a: 3.0e8,
            beta: 2.0,
            lorentz_width: 0.2,
            v_c_pos: 1.0,
            v_c_neg: -1.0,
        }
    }
}

/// Full parameter set of the nvCap compact model, stored in device units.
///
/// Field units follow the config file: lengths in nm, area in µm²,
/// polarization in µC/cm², volume densities in cm⁻³, sheet densities in
/// cm⁻², energies in eV. Use the `*_si` accessors inside the solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub area: f64,
    pub t_fe: f64,
    pub t_int: f64,
    pub alpha_fe: f64,
    pub eps_fe: f64,
    pub eps_de: f64,
    pub eps_int: f64,
    pub eps_depl: f64,
    pub p_s: f64,
    pub n_depl: f64,
    pub n_tr_depl_up: f64,
    pub n_tr_depl_down: f64,
    pub phi_b_fe: f64,
    pub phi_b_int: f64,
    pub n_tr_fe: f64,
    pub n_tr_int: f64,
    pub m_star_fe: f64,
    pub w_tr_t: f64,
    pub w_tr_rel: f64,
    pub x_c: f64,
    /// c₀·N_c product entering the capture rate, s⁻¹. The tabulated value
    /// is used verbatim even though its unit is suspicious.
    pub c0nc: f64,
    pub m_star_int: f64,
    pub w_tr_t_int: f64,
    pub w_tr_rel_int: f64,
    pub c0nc_int: f64,
    pub temperature: f64,
    pub switching: SwitchingParams,
    /// Parameter name → standard deviation (same unit as the parameter).
    pub variability: BTreeMap<String, f64>,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::nominal()
    }
}

impl ModelParams {
    /// The calibrated parameter set of the W/Al₂O₃/HZO/W bilayer stack.
    pub fn nominal() -> Self {
        Self {
            area: 1.0e4,
            t_fe: 10.0,
            t_int: 2.0,
            alpha_fe: 0.6,
            eps_fe: 70.0,
            eps_de: 20.0,
            eps_int: 9.0,
            eps_depl: 2.2,
            p_s: 20.0,
            n_depl: 1.2e22,
            n_tr_depl_up: 0.0,
            n_tr_depl_down: 7.5e13,
            phi_b_fe: 2.0,
            phi_b_int: 2.7,
            n_tr_fe: 1.5e19,
            n_tr_int: 1.0e19,
            m_star_fe: 0.4,
            w_tr_t: 2.1,
            w_tr_rel: 1.19,
            x_c: 5.0,
            c0nc: 1e-8,
            m_star_int: 0.4,
            w_tr_t_int: 2.8,
            w_tr_rel_int: 1.19,
            c0nc_int: 7e15,
            temperature: 300.0,
            switching: SwitchingParams::default(),
            variability: BTreeMap::new(),
        }
    }

    /// Nominal parameters with the Monte Carlo spread on `n_depl` attached.
    pub fn nominal_with_variability() -> Self {
        let mut p = Self::nominal();
        p.variability.insert("n_depl".into(), 3.9e20);
        p
    }

    pub fn area_si(&self) -> f64 {
        self.area * UM2
    }
    pub fn t_fe_si(&self) -> f64 {
        self.t_fe * NM
    }
    pub fn t_int_si(&self) -> f64 {
        self.t_int * NM
    }
    pub fn p_s_si(&self) -> f64 {
        self.p_s * UC_PER_CM2
    }
    pub fn n_depl_si(&self) -> f64 {
        self.n_depl * PER_CM3
    }
    /// Screening charge of down domains, C/m².
    pub fn q_tr_down_si(&self) -> f64 {
        Q * self.n_tr_depl_down * PER_CM2
    }
    /// Screening charge of up domains, C/m².
    pub fn q_tr_up_si(&self) -> f64 {
        Q * self.n_tr_depl_up * PER_CM2
    }
    /// Effective relative permittivity of the polar/non-polar phase mix.
    pub fn eps_fe_mix(&self) -> f64 {
        self.alpha_fe * self.eps_fe + (1.0 - self.alpha_fe) * self.eps_de
    }
    /// Switchable polarization amplitude α·P_s, C/m².
    pub fn p_switch_si(&self) -> f64 {
        self.alpha_fe * self.p_s_si()
    }
    /// ε₀·ε_fe, F/m.
    pub fn eps_fe_abs(&self) -> f64 {
        EPS_0 * self.eps_fe
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        find_spec(name).map(|s| (s.get)(self))
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), UnknownParam> {
        match find_spec(name) {
            Some(s) => {
                (s.set)(self, value);
                Ok(())
            }
            None => Err(UnknownParam {
                name: name.to_string(),
                suggestion: nearest_name(name),
            }),
        }
    }

    /// Every invariant violation; empty iff the set is simulatable.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for spec in PARAM_SPECS {
            let v = (spec.get)(self);
            if !spec.bound.admits(v) {
                out.push(Violation {
                    field: spec.name.to_string(),
                    value: v,
                    bound: spec.bound,
                });
            }
        }
        let sw = &self.switching;
        if !(sw.v_c_pos > 0.0) {
            out.push(Violation {
                field: "v_c_pos".into(),
                value: sw.v_c_pos,
                bound: Bound::Positive,
            });
        }
        if !(sw.v_c_neg < 0.0) {
            out.push(Violation {
                field: "v_c_neg".into(),
                value: sw.v_c_neg,
                bound: Bound::Negative,
            });
        }
        for (name, sigma) in &self.variability {
            if find_spec(name).is_none() {
                out.push(Violation {
                    field: format!("variability.{name}"),
                    value: *sigma,
                    bound: Bound::KnownParameter,
                });
            } else if !(*sigma >= 0.0 && sigma.is_finite()) {
                out.push(Violation {
                    field: format!("variability.{name}"),
                    value: *sigma,
                    bound: Bound::NonNegative,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("unknown parameter `{name}`{}", suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default())]
pub struct UnknownParam {
    pub name: String,
    pub suggestion: Option<String>,
}

/// Admissible range of a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Positive,
    Negative,
    NonNegative,
    UnitInterval,
    KnownParameter,
}

impl Bound {
    pub fn admits(self, v: f64) -> bool {
        match self {
            Bound::Positive => v > 0.0 && v.is_finite(),
            Bound::Negative => v < 0.0 && v.is_finite(),
            Bound::NonNegative => v >= 0.0 && v.is_finite(),
            Bound::UnitInterval => (0.0..=1.0).contains(&v),
            Bound::KnownParameter => false,
        }
    }

    /// Lower physical bound used to truncate random draws.
    pub fn lower(self) -> f64 {
        match self {
            Bound::Positive | Bound::NonNegative | Bound::UnitInterval => 0.0,
            _ => f64::NEG_INFINITY,
        }
    }

    pub fn upper(self) -> f64 {
        match self {
            Bound::UnitInterval => 1.0,
            Bound::Negative => 0.0,
            _ => f64::INFINITY,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Positive => write!(f, "> 0"),
            Bound::Negative => write!(f, "< 0"),
            Bound::NonNegative => write!(f, ">= 0"),
            Bound::UnitInterval => write!(f, "in [0,1]"),
            Bound::KnownParameter => write!(f, "must name a known parameter"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub value: f64,
    pub bound: Bound,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} = {} violates {} {}",
            self.field, self.value, self.field, self.bound
        )
    }
}

/// Physical unit of a registry entry, in config notation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    None,
    Nm,
    Um2,
    UcPerCm2,
    PerCm3,
    PerCm2,
    Ev,
    Kelvin,
    PerSecond,
    Second,
    VoltPerMeter,
    Volt,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::None => "",
            Unit::Nm => "nm",
            Unit::Um2 => "um2",
            Unit::UcPerCm2 => "uC/cm2",
            Unit::PerCm3 => "cm-3",
            Unit::PerCm2 => "cm-2",
            Unit::Ev => "eV",
            Unit::Kelvin => "K",
            Unit::PerSecond => "s-1",
            Unit::Second => "s",
            Unit::VoltPerMeter => "V/m",
            Unit::Volt => "V",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    Device,
    Leakage,
    Switching,
}

impl Section {
    pub fn name(self) -> &'static str {
        match self {
            Section::Device => "device",
            Section::Leakage => "leakage",
            Section::Switching => "switching",
        }
    }
}

pub struct ParamSpec {
    pub name: &'static str,
    pub section: Section,
    pub unit: Unit,
    pub bound: Bound,
    pub get: fn(&ModelParams) -> f64,
    pub set: fn(&mut ModelParams, f64),
}

macro_rules! spec {
    ($section:ident, $unit:ident, $bound:ident, $($path:ident).+) => {
        ParamSpec {
            name: last_ident!($($path).+),
            section: Section::$section,
            unit: Unit::$unit,
            bound: Bound::$bound,
            get: |p| p.$($path).+,
            set: |p, v| p.$($path).+ = v,
        }
    };
}

macro_rules! last_ident {
    ($head:ident) => { stringify!($head) };
    ($head:ident . $($rest:ident).+) => { last_ident!($($rest).+) };
}

/// Registry of every scalar parameter, in config file order.
pub static PARAM_SPECS: &[ParamSpec] = &[
    spec!(Device, Um2, Positive, area),
    spec!(Device, Nm, Positive, t_fe),
    spec!(Device, Nm, Positive, t_int),
    spec!(Device, None, UnitInterval, alpha_fe),
    spec!(Device, None, Positive, eps_fe),
    spec!(Device, None, Positive, eps_de),
    spec!(Device, None, Positive, eps_int),
    spec!(Device, None, Positive, eps_depl),
    spec!(Device, UcPerCm2, Positive, p_s),
    spec!(Device, PerCm3, Positive, n_depl),
    spec!(Device, PerCm2, NonNegative, n_tr_depl_up),
    spec!(Device, PerCm2, NonNegative, n_tr_depl_down),
    spec!(Device, Kelvin, Positive, temperature),
    spec!(Leakage, Ev, Positive, phi_b_fe),
    spec!(Leakage, Ev, Positive, phi_b_int),
    spec!(Leakage, PerCm3, NonNegative, n_tr_fe),
    spec!(Leakage, PerCm3, NonNegative, n_tr_int),
    spec!(Leakage, None, Positive, m_star_fe),
    spec!(Leakage, Ev, Positive, w_tr_t),
    spec!(Leakage, Ev, Positive, w_tr_rel),
    spec!(Leakage, Nm, Positive, x_c),
    spec!(Leakage, PerSecond, Positive, c0nc),
    spec!(Leakage, None, Positive, m_star_int),
    spec!(Leakage, Ev, Positive, w_tr_t_int),
    spec!(Leakage, Ev, Positive, w_tr_rel_int),
    spec!(Leakage, PerSecond, Positive, c0nc_int),
    spec!(Switching, Second, Positive, switching.tau_0),
    spec!(Switching, VoltPerMeter, Positive, switching.e_a),
    spec!(Switching, None, Positive, switching.beta),
    spec!(Switching, None, Positive, switching.lorentz_width),
    spec!(Switching, Volt, Positive, switching.v_c_pos),
    spec!(Switching, Volt, Negative, switching.v_c_neg),
];

pub fn find_spec(name: &str) -> Option<&'static ParamSpec> {
    PARAM_SPECS.iter().find(|s| s.name == name)
}

/// Closest registry name by edit distance, for diagnostics.
pub fn nearest_name(name: &str) -> Option<String> {
    PARAM_SPECS
        .iter()
        .map(|s| (edit_distance(name, s.name), s.name))
        .min_by_key(|(d, _)| *d)
        .filter(|(d, _)| *d <= name.len().max(3))
        .map(|(_, n)| n.to_string())
}

pub(crate) fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominal_is_valid() {
        assert!(ModelParams::nominal().validate().is_empty());
        assert!(ModelParams::nominal_with_variability().validate().is_empty());
    }

    #[test]
    fn nominal_values() {
        let p = ModelParams::nominal();
        assert_eq!(p.alpha_fe, 0.6);
        assert_eq!(p.eps_fe, 70.0);
        assert_eq!(p.eps_de, 20.0);
        assert_eq!(p.eps_depl, 2.2);
        assert_eq!(p.p_s, 20.0);
        assert_eq!(p.n_depl, 1.2e22);
        assert_eq!(p.n_tr_depl_up, 0.0);
        assert_eq!(p.n_tr_depl_down, 7.5e13);
        assert_eq!(p.phi_b_fe, 2.0);
        assert_eq!(p.phi_b_int, 2.7);
        assert_eq!(p.n_tr_fe, 1.5e19);
        assert_eq!(p.m_star_fe, 0.4);
        assert_eq!(p.w_tr_t, 2.1);
        assert_eq!(p.w_tr_rel, 1.19);
        assert_eq!(p.x_c, 5.0);
        assert_eq!(p.c0nc, 1e-8);
        let v = ModelParams::nominal_with_variability();
        assert_eq!(v.variability["n_depl"], 3.9e20);
    }

    #[test]
    fn alpha_out_of_range_is_named() {
        let mut p = ModelParams::nominal();
        p.alpha_fe = 1.3;
        let v = p.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "alpha_fe");
        assert_eq!(v[0].bound, Bound::UnitInterval);
        assert!(v[0].to_string().contains("[0,1]"));
    }

    #[test]
    fn zero_thickness_is_named() {
        let mut p = ModelParams::nominal();
        p.t_fe = 0.0;
        let v = p.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "t_fe");
        assert!(v[0].to_string().contains("t_fe > 0"));
    }

    #[test]
    fn coercive_signs_checked() {
        let mut p = ModelParams::nominal();
        p.switching.v_c_neg = 0.5;
        let v = p.validate();
        assert!(v.iter().any(|x| x.field == "v_c_neg"));
    }

    #[test]
    fn validate_is_pure() {
        let mut p = ModelParams::nominal();
        p.t_int = -1.0;
        p.n_depl = 0.0;
        assert_eq!(p.validate(), p.validate());
        assert_eq!(p.validate().len(), 2);
    }

    #[test]
    fn unknown_variability_key() {
        let mut p = ModelParams::nominal();
        p.variability.insert("n_dpl".into(), 1.0);
        assert_eq!(p.validate()[0].bound, Bound::KnownParameter);
    }

    #[test]
    fn registry_get_set_roundtrip() {
        let mut p = ModelParams::nominal();
        for s in PARAM_SPECS {
            let v = (s.get)(&p) * 1.5 + 1.0;
            p.set(s.name, v).unwrap();
            assert_eq!(p.get(s.name), Some(v), "{}", s.name);
        }
        let err = p.set("n_dpel", 1.0).unwrap_err();
        assert_eq!(err.suggestion.as_deref(), Some("n_depl"));
    }
}
