//! Order-of-magnitude estimators for systematic effects and the table of
//! Talbot times.

use std::f64::consts::PI;

use crate::constants::{ELECTRON_MASS, ELEMENTARY_CHARGE, VACUUM_PERMITTIVITY};
use crate::error::{require_non_negative, require_positive, Result};
use crate::physics::{electron_momentum, electron_speed, free_fall_distance, talbot_time};

/// Deflection of a beam electron by a point charge at impact parameter b:
/// e²/(2πε₀ m_e γ v² b).
pub fn charge_deflection_angle(kinetic_energy: f64, impact_parameter: f64) -> Result<f64> {
    let b = require_positive("impact parameter", impact_parameter)?;
    let v = electron_speed(require_positive("electron kinetic energy", kinetic_energy)?)?;
    let gamma = 1.0 + kinetic_energy / (ELECTRON_MASS * crate::constants::LIGHT_SPEED.powi(2));
    Ok(ELEMENTARY_CHARGE.powi(2) / (2.0 * PI * VACUUM_PERMITTIVITY * ELECTRON_MASS * gamma * v * v * b))
}

/// Displacement from the mirror-charge force in a spherical cavity of
/// radius r after time t: (e²/4πε₀r²) t²/2M.
pub fn mirror_charge_shift(cavity_radius: f64, time: f64, mass: f64) -> Result<f64> {
    let r = require_positive("cavity radius", cavity_radius)?;
    let t = require_non_negative("time", time)?;
    let m = require_positive("particle mass", mass)?;
    let force = ELEMENTARY_CHARGE.powi(2) / (4.0 * PI * VACUUM_PERMITTIVITY * r * r);
    Ok(force * t * t / (2.0 * m))
}

/// Largest recoil velocity from back-scattering one electron, 2p_e/M.
pub fn backscatter_recoil(kinetic_energy: f64, mass: f64) -> Result<f64> {
    let m = require_positive("particle mass", mass)?;
    Ok(2.0 * electron_momentum(kinetic_energy)? / m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TalbotRow {
    pub mass: f64,
    pub talbot_time: f64,
    pub free_fall: f64,
}

/// (M, T_M, 2gT_M²) for each mass at grating period `period`.
pub fn talbot_table(masses: &[f64], period: f64) -> Result<Vec<TalbotRow>> {
    masses
        .iter()
        .map(|&mass| {
            let tm = talbot_time(mass, period)?;
            Ok(TalbotRow {
                mass,
                talbot_time: tm,
                free_fall: free_fall_distance(tm)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystematicsReport {
    pub deflection_angle: f64,
    pub mirror_shift: f64,
    pub backscatter_velocity: f64,
    pub talbot_rows: Vec<TalbotRow>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{units::KEV, AMU};

    #[test]
    fn deflection_scales_inversely_with_impact_parameter() {
        let a = charge_deflection_angle(300.0 * KEV, 1e-9).unwrap();
        let b = charge_deflection_angle(300.0 * KEV, 2e-9).unwrap();
        assert!((a / b - 2.0).abs() < 1e-14);
        assert!(charge_deflection_angle(300.0 * KEV, 0.0).is_err());
    }

    #[test]
    fn mirror_shift_quadratic_in_time() {
        let m = 2e9 * AMU;
        assert_eq!(mirror_charge_shift(2e-3, 0.0, m).unwrap(), 0.0);
        let a = mirror_charge_shift(2e-3, 1e-4, m).unwrap();
        let b = mirror_charge_shift(2e-3, 3e-4, m).unwrap();
        assert!((b / a - 9.0).abs() < 1e-12);
    }

    #[test]
    fn recoil_inverse_in_mass_and_nonrelativistic_limit() {
        let a = backscatter_recoil(300.0 * KEV, 1e-17).unwrap();
        let b = backscatter_recoil(300.0 * KEV, 2e-17).unwrap();
        assert!((a / b - 2.0).abs() < 1e-14);
        let e = 1e-3 * KEV;
        let nonrel = 2.0 * (2.0 * ELECTRON_MASS * e).sqrt() / 1e-17;
        assert!((backscatter_recoil(e, 1e-17).unwrap() / nonrel - 1.0).abs() < 1e-5);
    }

    #[test]
    fn halving_period_quarters_times() {
        let masses = [1e6 * AMU, 2e9 * AMU];
        let full = talbot_table(&masses, 192e-12).unwrap();
        let half = talbot_table(&masses, 96e-12).unwrap();
        for (f, h) in full.iter().zip(&half) {
            assert!((f.talbot_time / h.talbot_time - 4.0).abs() < 1e-12);
        }
    }
}
