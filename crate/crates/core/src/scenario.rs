//! A complete parameter set for one experiment, with the silicon
//! nanocrystal case study as the reference configuration.

use std::f64::consts::PI;

use crate::constants::{units, AMU, ELECTRON_MASS};
use crate::crystal::{CrystalSpec, MillerIndex};
use crate::error::{require_positive, Result};
use crate::grating::{coefficients, detection_probability, wentzel_amplitudes, Alignment, Amplitudes, DetectionProbability, GratingCoefficients, MaskSpec};
use crate::interference::{EvolutionParams, FringeModel};
use crate::macroscopicity::{ExclusionSetup, Kernel};
use crate::physics::{source_state, talbot_time, BeamSpec, GaussianState};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub beam_energy: f64,
    /// Half width at half maximum of the electron spot intensity.
    pub spot_hwhm: f64,
    pub lattice_constant: f64,
    pub atomic_number: u32,
    pub radius: f64,
    pub half_thickness: f64,
    pub mass: f64,
    pub trap_frequency: f64,
    pub temperature: f64,
    pub reference: MillerIndex,
    /// Grating period; `None` derives it from the reference reflection.
    pub period: Option<f64>,
    /// Explicit (σ_X, σ_P) overriding the thermal trap state.
    pub source_widths: Option<(f64, f64)>,
    pub orders: Vec<i32>,
    pub pinhole_width: f64,
    pub alignment: Alignment,
    pub electron_x: f64,
    pub electron_y: f64,
    /// Pre-diffraction time; `None` means one Talbot time.
    pub t0: Option<f64>,
    pub t: f64,
    /// Post-diffraction time entering the macroscopicity bound.
    pub macro_time: f64,
    pub reference_mass: f64,
    pub kernel: Kernel,
}

impl Scenario {
    /// Si nanosphere-cut disc (R = 109 nm, b = 30 nm, 2×10⁹ amu) trapped at
    /// 305 kHz and 12 µK, probed by a 300 keV beam with a 115 nm HWHM spot
    /// through orders ±1, ±2 of the (1,−1,0) reflection.
    pub fn case_study() -> Self {
        Self {
            beam_energy: 300.0 * units::KEV,
            spot_hwhm: 115.0 * units::NM,
            lattice_constant: 543.0 * units::PM,
            atomic_number: 14,
            radius: 109.0 * units::NM,
            half_thickness: 30.0 * units::NM,
            mass: 2e9 * AMU,
            trap_frequency: 2.0 * PI * 305.0 * units::KHZ,
            temperature: 12.0 * units::UK,
            reference: MillerIndex::new(1, -1, 0),
            period: None,
            source_widths: None,
            orders: vec![-2, -1, 1, 2],
            pinhole_width: 1e-3,
            alignment: Alignment::Perfect,
            electron_x: 0.0,
            electron_y: 0.0,
            t0: None,
            t: 0.0,
            macro_time: 1.0 * units::MS,
            reference_mass: ELECTRON_MASS,
            kernel: Kernel::Squared,
        }
    }

    pub fn beam(&self) -> Result<BeamSpec> {
        BeamSpec::from_spot_hwhm(self.beam_energy, self.spot_hwhm)
    }

    pub fn crystal(&self) -> Result<CrystalSpec> {
        CrystalSpec::new(self.lattice_constant, self.atomic_number, self.radius, self.half_thickness)
    }

    /// Grating period d, by default the spacing of the reference reflection.
    pub fn period(&self) -> Result<f64> {
        match self.period {
            Some(d) => require_positive("grating period", d),
            None => self.crystal()?.d_spacing(self.reference),
        }
    }

    pub fn talbot_time(&self) -> Result<f64> {
        talbot_time(self.mass, self.period()?)
    }

    pub fn state(&self) -> Result<GaussianState> {
        match self.source_widths {
            Some((sx, sp)) => GaussianState::new(self.mass, sx, sp),
            None => source_state(self.mass, self.trap_frequency, self.temperature),
        }
    }

    pub fn mask(&self) -> Result<MaskSpec> {
        MaskSpec::new(self.period()?, &self.orders, self.pinhole_width)
    }

    pub fn amplitudes(&self) -> Result<Amplitudes> {
        wentzel_amplitudes(&self.mask()?, self.reference, &self.crystal()?, &self.beam()?)
    }

    pub fn coefficients(&self) -> Result<GratingCoefficients> {
        coefficients(&self.mask()?, &self.amplitudes()?, self.alignment, (self.electron_x, self.electron_y))
    }

    pub fn pre_time(&self) -> Result<f64> {
        match self.t0 {
            Some(t0) => Ok(t0),
            None => self.talbot_time(),
        }
    }

    pub fn evolution(&self) -> Result<EvolutionParams> {
        EvolutionParams::new(self.pre_time()?, self.t, self.state()?, self.period()?)
    }

    pub fn fringe_model(&self) -> Result<FringeModel> {
        FringeModel::new(&self.coefficients()?, &self.evolution()?)
    }

    pub fn detection_probability(&self) -> Result<DetectionProbability> {
        detection_probability(&self.crystal()?, &self.beam()?, &self.mask()?, &self.amplitudes()?)
    }

    pub fn exclusion(&self) -> Result<ExclusionSetup> {
        Ok(ExclusionSetup {
            mass: self.mass,
            period: self.period()?,
            time: self.macro_time,
            talbot_time: self.talbot_time()?,
            crystal: self.crystal()?,
            reference_mass: self.reference_mass,
            kernel: self.kernel,
        })
    }
}
