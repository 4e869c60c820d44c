//! Diamond-cubic lattice geometry, structure factors, Wentzel scattering
//! amplitudes and the density profiles of a spheroidal nanocrystal.
//!
//! Miller indices are primitive-cell indices of the fcc lattice. With the
//! primitive reciprocal basis b₁ = (2π/a)(−1,1,1), b₂ = (2π/a)(1,−1,1),
//! b₃ = (2π/a)(1,1,−1) the two-atom basis gives F = 2cos[(h+k+l)π/4].

use std::f64::consts::PI;
use std::fmt;

use crate::constants::BOHR_RADIUS;
use crate::error::{domain, require_non_negative, require_positive, Error, Result};
use crate::physics::BeamSpec;
use crate::special::j1_over_x;

/// Miller index in the primitive-cell representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MillerIndex {
    pub h: i32,
    pub k: i32,
    pub l: i32,
}

impl MillerIndex {
    pub const fn new(h: i32, k: i32, l: i32) -> Self {
        Self { h, k, l }
    }

    pub fn is_zero(&self) -> bool {
        self.h == 0 && self.k == 0 && self.l == 0
    }

    /// The n-th multiple of this reflection.
    pub fn scaled(&self, n: i32) -> Self {
        Self::new(n * self.h, n * self.k, n * self.l)
    }

    /// Conventional cubic indices (H, K, L) of the same reciprocal vector.
    pub fn to_conventional(&self) -> [i32; 3] {
        let Self { h, k, l } = *self;
        [-h + k + l, h - k + l, h + k - l]
    }

    /// Reciprocal lattice vector g (1/m) for lattice constant `a`.
    pub fn reciprocal_vector(&self, a: f64) -> [f64; 3] {
        let [x, y, z] = self.to_conventional();
        let s = 2.0 * PI / a;
        [s * x as f64, s * y as f64, s * z as f64]
    }

    /// Lattice plane spacing d = 2π/|g|.
    pub fn d_spacing(&self, a: f64) -> Result<f64> {
        require_positive("lattice constant", a)?;
        if self.is_zero() {
            return Err(Error::Config("d-spacing of the (000) reflection is undefined".into()));
        }
        let [x, y, z] = self.reciprocal_vector(a);
        Ok(2.0 * PI / (x * x + y * y + z * z).sqrt())
    }

    /// Structure factor of the diamond two-atom basis, 2cos[(h+k+l)π/4].
    ///
    /// Forbidden reflections ((h+k+l)/2 odd) return exactly zero.
    pub fn structure_factor(&self) -> f64 {
        let s = (self.h + self.k + self.l).rem_euclid(8);
        // cos(sπ/4) for s = 0..7, tabulated so that zeros are exact.
        const COS_EIGHTHS: [f64; 8] = [
            1.0,
            std::f64::consts::FRAC_1_SQRT_2,
            0.0,
            -std::f64::consts::FRAC_1_SQRT_2,
            -1.0,
            -std::f64::consts::FRAC_1_SQRT_2,
            0.0,
            std::f64::consts::FRAC_1_SQRT_2,
        ];
        2.0 * COS_EIGHTHS[s as usize]
    }
}

impl fmt::Display for MillerIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {} {})", self.h, self.k, self.l)
    }
}

/// Wentzel screening parameters of a single atom species.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreeningParams {
    /// Screening length a₀/Z^{1/3}.
    pub screening_length: f64,
    /// Z^{2/3}.
    pub charge_factor: f64,
    /// 1 + E₀/m_ec².
    pub relativistic_factor: f64,
}

impl ScreeningParams {
    pub fn new(atomic_number: u32, beam: &BeamSpec) -> Self {
        let z = atomic_number as f64;
        Self {
            screening_length: BOHR_RADIUS / z.cbrt(),
            charge_factor: z.powf(2.0 / 3.0),
            relativistic_factor: beam.lorentz_factor(),
        }
    }
}

/// Oblate spheroidal nanocrystal with a diamond-cubic lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalSpec {
    lattice_constant: f64,
    atomic_number: u32,
    radius: f64,
    half_thickness: f64,
}

impl CrystalSpec {
    pub fn new(lattice_constant: f64, atomic_number: u32, radius: f64, half_thickness: f64) -> Result<Self> {
        require_positive("lattice constant", lattice_constant)?;
        require_positive("spheroid radius", radius)?;
        require_positive("spheroid half thickness", half_thickness)?;
        if atomic_number == 0 {
            return Err(Error::Config("atomic number must be positive".into()));
        }
        if half_thickness > radius {
            return Err(domain("oblate spheroid needs half thickness ≤ radius", half_thickness / radius));
        }
        Ok(Self {
            lattice_constant,
            atomic_number,
            radius,
            half_thickness,
        })
    }

    /// Silicon: a = 543 pm, Z = 14.
    pub fn silicon(radius: f64, half_thickness: f64) -> Result<Self> {
        Self::new(543e-12, 14, radius, half_thickness)
    }

    pub fn lattice_constant(&self) -> f64 {
        self.lattice_constant
    }

    pub fn atomic_number(&self) -> u32 {
        self.atomic_number
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn half_thickness(&self) -> f64 {
        self.half_thickness
    }

    /// V = 4π b_M R_M²/3.
    pub fn volume(&self) -> f64 {
        4.0 * PI * self.half_thickness * self.radius * self.radius / 3.0
    }

    /// Number of primitive cells, four per conventional cube: 4V/a³.
    pub fn cell_count(&self) -> f64 {
        4.0 * self.volume() / self.lattice_constant.powi(3)
    }

    pub fn d_spacing(&self, idx: MillerIndex) -> Result<f64> {
        idx.d_spacing(self.lattice_constant)
    }

    /// Trajectory-averaged cell density ρ̄(r⊥) = (N/V)·2b_M√(1 − r⊥²/R_M²).
    pub fn projected_density(&self, r_perp: f64) -> Result<f64> {
        let r = require_non_negative("transverse radius", r_perp)?;
        let u = r / self.radius;
        if u >= 1.0 {
            return Ok(0.0);
        }
        Ok(self.cell_count() / self.volume() * 2.0 * self.half_thickness * (1.0 - u * u).sqrt())
    }

    /// 2D Fourier transform of the projected density, 3N j₁(kR)/(kR).
    pub fn cell_density_fourier(&self, k_perp: f64) -> Result<f64> {
        let k = require_non_negative("transverse wavenumber", k_perp)?;
        Ok(3.0 * self.cell_count() * j1_over_x(k * self.radius))
    }

    /// Fourier transform of a homogeneous mass density of total mass `mass`:
    /// 3M j₁(s)/s with s = √((q⊥R)² + (q_z b)²).
    pub fn mass_density_fourier(&self, q: [f64; 3], mass: f64) -> f64 {
        let qp2 = q[0] * q[0] + q[1] * q[1];
        let s = (qp2 * self.radius * self.radius + (q[2] * self.half_thickness).powi(2)).sqrt();
        3.0 * mass * j1_over_x(s)
    }

    /// Wentzel-model scattering amplitude f_hkl (m²):
    /// F·(1 + E₀/m_ec²)·2Z^{2/3} a_s λ / (1 + (2π a_s/d)²).
    pub fn wentzel_amplitude(&self, idx: MillerIndex, beam: &BeamSpec) -> Result<f64> {
        let d = self.d_spacing(idx)?;
        let p = ScreeningParams::new(self.atomic_number, beam);
        let screening = 2.0 * PI * p.screening_length / d;
        Ok(idx.structure_factor()
            * p.relativistic_factor
            * 2.0
            * p.charge_factor
            * p.screening_length
            * beam.wavelength()
            / (1.0 + screening * screening))
    }
}
