//! Physical constants and unit conversions.
//!
//! All values are the CODATA 2018 recommended values (the 2019 SI redefinition
//! fixes h, e, k_B and c exactly). Internally every quantity is SI; the
//! conversion factors below are only used at the I/O boundary.

use std::f64::consts::PI;

/// Label of the pinned constants snapshot, echoed in output headers.
pub const CODATA_REVISION: &str = "CODATA 2018";

/// Planck constant h (J s), exact.
pub const PLANCK_H: f64 = 6.626_070_15e-34;
/// Reduced Planck constant ħ = h/2π (J s).
pub const HBAR: f64 = PLANCK_H / (2.0 * PI);
/// Electron rest mass m_e (kg).
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
/// Elementary charge e (C), exact.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity ε₀ (F/m).
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Speed of light c (m/s), exact.
pub const LIGHT_SPEED: f64 = 299_792_458.0;
/// Boltzmann constant k_B (J/K), exact.
pub const BOLTZMANN_K: f64 = 1.380_649e-23;
/// Bohr radius a₀ (m).
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
/// Atomic mass unit (kg).
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Standard gravity g (m/s²), exact by convention.
pub const STANDARD_GRAVITY: f64 = 9.806_65;

/// Electron rest energy m_e c² (J).
pub const ELECTRON_REST_ENERGY: f64 = ELECTRON_MASS * LIGHT_SPEED * LIGHT_SPEED;

/// Every pinned constant with its name, in a fixed order. Used to fingerprint
/// the snapshot in emitted files.
pub const SNAPSHOT: [(&str, f64); 10] = [
    ("planck_h", PLANCK_H),
    ("hbar", HBAR),
    ("electron_mass", ELECTRON_MASS),
    ("elementary_charge", ELEMENTARY_CHARGE),
    ("vacuum_permittivity", VACUUM_PERMITTIVITY),
    ("light_speed", LIGHT_SPEED),
    ("boltzmann_k", BOLTZMANN_K),
    ("bohr_radius", BOHR_RADIUS),
    ("amu", AMU),
    ("standard_gravity", STANDARD_GRAVITY),
];

pub mod units {
    //! Conversion factors from convenience units to SI.
    use super::{AMU, ELEMENTARY_CHARGE};

    pub const PM: f64 = 1e-12;
    pub const NM: f64 = 1e-9;
    pub const UM: f64 = 1e-6;
    pub const MM: f64 = 1e-3;
    pub const US: f64 = 1e-6;
    pub const MS: f64 = 1e-3;
    pub const UK: f64 = 1e-6;
    pub const KHZ: f64 = 1e3;
    pub const EV: f64 = ELEMENTARY_CHARGE;
    pub const KEV: f64 = 1e3 * ELEMENTARY_CHARGE;
    pub const DALTON: f64 = AMU;
}
