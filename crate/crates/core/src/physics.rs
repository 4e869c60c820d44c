//! Electron kinematics, Gaussian source states and Talbot-scale bookkeeping.

use crate::constants::{
    BOLTZMANN_K, ELECTRON_REST_ENERGY, HBAR, LIGHT_SPEED, PLANCK_H,
    STANDARD_GRAVITY,
};
use crate::error::{domain, require_non_negative, require_positive, Result};

/// Electron probe: kinetic energy and transverse momentum spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSpec {
    kinetic_energy: f64,
    transverse_width: f64,
}

impl BeamSpec {
    /// `kinetic_energy` in J, `transverse_width` Δk_in in 1/m.
    pub fn new(kinetic_energy: f64, transverse_width: f64) -> Result<Self> {
        Ok(Self {
            kinetic_energy: require_positive("beam kinetic energy", kinetic_energy)?,
            transverse_width: require_positive("beam transverse width", transverse_width)?,
        })
    }

    /// Builds the beam from the intensity half-width-half-maximum of the spot.
    ///
    /// With ψ_in ∝ exp(−Δk² r²) the intensity falls to one half at
    /// r = √(ln 2 / 2)/Δk.
    pub fn from_spot_hwhm(kinetic_energy: f64, spot_hwhm: f64) -> Result<Self> {
        let r = require_positive("beam spot HWHM", spot_hwhm)?;
        Self::new(kinetic_energy, (std::f64::consts::LN_2 / 2.0).sqrt() / r)
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.kinetic_energy
    }

    pub fn transverse_width(&self) -> f64 {
        self.transverse_width
    }

    pub fn spot_hwhm(&self) -> f64 {
        (std::f64::consts::LN_2 / 2.0).sqrt() / self.transverse_width
    }

    pub fn wavelength(&self) -> f64 {
        wavelength_unchecked(self.kinetic_energy)
    }

    /// 1 + E₀/m_e c².
    pub fn lorentz_factor(&self) -> f64 {
        1.0 + self.kinetic_energy / ELECTRON_REST_ENERGY
    }
}

/// Gaussian phase-space state of the nanoparticle centre of mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    mass: f64,
    sigma_x: f64,
    sigma_p: f64,
}

impl GaussianState {
    pub fn new(mass: f64, sigma_x: f64, sigma_p: f64) -> Result<Self> {
        let mass = require_positive("particle mass", mass)?;
        let sigma_x = require_positive("position width", sigma_x)?;
        let sigma_p = require_positive("momentum width", sigma_p)?;
        // Allow for roundoff in states constructed at the uncertainty bound.
        if sigma_x * sigma_p < 0.5 * HBAR * (1.0 - 1e-12) {
            return Err(domain("uncertainty product σ_X σ_P / (ħ/2)", sigma_x * sigma_p / (0.5 * HBAR)));
        }
        Ok(Self {
            mass,
            sigma_x,
            sigma_p,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn sigma_x(&self) -> f64 {
        self.sigma_x
    }

    pub fn sigma_p(&self) -> f64 {
        self.sigma_p
    }
}

fn wavelength_unchecked(e0: f64) -> f64 {
    PLANCK_H * LIGHT_SPEED / (e0 * (2.0 * ELECTRON_REST_ENERGY + e0)).sqrt()
}

/// Relativistic de Broglie wavelength λ = hc/√(E₀(2m_ec² + E₀)).
pub fn electron_wavelength(kinetic_energy: f64) -> Result<f64> {
    require_positive("electron kinetic energy", kinetic_energy)?;
    Ok(wavelength_unchecked(kinetic_energy))
}

/// Relativistic electron momentum p = √(E₀(E₀ + 2m_ec²))/c.
pub fn electron_momentum(kinetic_energy: f64) -> Result<f64> {
    require_non_negative("electron kinetic energy", kinetic_energy)?;
    Ok((kinetic_energy * (kinetic_energy + 2.0 * ELECTRON_REST_ENERGY)).sqrt() / LIGHT_SPEED)
}

/// Electron speed from its kinetic energy.
pub fn electron_speed(kinetic_energy: f64) -> Result<f64> {
    let gamma = 1.0 + require_non_negative("electron kinetic energy", kinetic_energy)? / ELECTRON_REST_ENERGY;
    Ok(LIGHT_SPEED * (1.0 - 1.0 / (gamma * gamma)).sqrt())
}

/// Talbot time T_M = M d²/h.
pub fn talbot_time(mass: f64, period: f64) -> Result<f64> {
    require_positive("particle mass", mass)?;
    require_positive("grating period", period)?;
    Ok(mass * period * period / PLANCK_H)
}

/// Distance fallen under standard gravity in twice the Talbot time, 2gT_M².
pub fn free_fall_distance(talbot_time: f64) -> Result<f64> {
    let t = require_non_negative("Talbot time", talbot_time)?;
    Ok(2.0 * STANDARD_GRAVITY * t * t)
}

/// Thermal broadening √coth(ħω/2k_BT) applied to both ground-state widths.
pub fn thermal_factor(trap_frequency: f64, temperature: f64) -> Result<f64> {
    let omega = require_positive("trap angular frequency", trap_frequency)?;
    let t = require_non_negative("temperature", temperature)?;
    if t == 0.0 {
        return Ok(1.0);
    }
    let x = HBAR * omega / (2.0 * BOLTZMANN_K * t);
    Ok((1.0 / x.tanh()).sqrt())
}

/// Released trap state: harmonic-oscillator ground-state widths scaled by the
/// thermal factor. `trap_frequency` is the angular frequency ω.
pub fn source_state(mass: f64, trap_frequency: f64, temperature: f64) -> Result<GaussianState> {
    let m = require_positive("particle mass", mass)?;
    let factor = thermal_factor(trap_frequency, temperature)?;
    let sigma_x = (HBAR / (2.0 * m * trap_frequency)).sqrt() * factor;
    let sigma_p = (HBAR * m * trap_frequency / 2.0).sqrt() * factor;
    GaussianState::new(m, sigma_x, sigma_p)
}
