//! Physical constants (CODATA 2018) and unit conversion factors.
//!
//! Everything inside the crate is computed in SI (m, V, C, s, F) with
//! energies kept in eV. Config files and CSV use device units
//! (nm, µm², µC/cm², cm⁻³, cm⁻²); the factors below are the only place
//! where those conversions live.

/// Elementary charge, C.
pub const Q: f64 = 1.602_176_634e-19;
/// Boltzmann constant, eV/K.
pub const K_B: f64 = 8.617_333_262e-5;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Reduced Planck constant, eV·s.
pub const HBAR_EV: f64 = HBAR / Q;
/// Free-electron mass, kg.
pub const M_E: f64 = 9.109_383_701_5e-31;
/// Vacuum permittivity, F/m.
pub const EPS_0: f64 = 8.854_187_812_8e-12;
/// Vacuum permittivity, F/cm.
pub const EPS_0_PER_CM: f64 = EPS_0 * 1e-2;

pub const NM: f64 = 1e-9;
pub const UM2: f64 = 1e-12;
/// µC/cm² → C/m².
pub const UC_PER_CM2: f64 = 1e-2;
/// cm⁻³ → m⁻³.
pub const PER_CM3: f64 = 1e6;
/// cm⁻² → m⁻².
pub const PER_CM2: f64 = 1e4;
/// F/m² → fF/µm².
pub const F_PER_M2_TO_FF_PER_UM2: f64 = 1e3;
/// A/m² → A/cm².
pub const A_PER_M2_TO_A_PER_CM2: f64 = 1e-4;
