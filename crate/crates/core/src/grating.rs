//! Conditional grating transformation produced by Bragg-filtered electron
//! detection.
//!
//! Conditioned on the detected electron position (x, y) the centre-of-mass
//! state maps as ρ ↦ Σ B_{n,n'} e^{2πin(x−X)/d} ρ e^{2πin'(X−x)/d}. The
//! positive prefactor |⟨r⊥|ψ̄_in⟩|² common to every B_{n,n'} is dropped:
//! all fringe observables are normalised per detected electron.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::crystal::{CrystalSpec, MillerIndex};
use crate::error::{require_positive, Error, Result};
use crate::physics::BeamSpec;
use crate::quadrature;

/// Scattering amplitude per selected Bragg order.
pub type Amplitudes = BTreeMap<i32, Complex64>;

/// Pinhole mask in the back focal plane.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSpec {
    period: f64,
    orders: Vec<i32>,
    pinhole_width: f64,
}

impl MaskSpec {
    /// `orders` are the transmitted multiples of the reference reflection;
    /// they are sorted and must not contain 0 or duplicates.
    pub fn new(period: f64, orders: &[i32], pinhole_width: f64) -> Result<Self> {
        require_positive("grating period", period)?;
        require_positive("pinhole relative width", pinhole_width)?;
        if orders.is_empty() {
            return Err(Error::Config("mask selects no Bragg orders".into()));
        }
        if orders.contains(&0) {
            return Err(Error::Config("the undiffracted order 0 is always blocked".into()));
        }
        let mut sorted = orders.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate Bragg order in {orders:?}")));
        }
        Ok(Self {
            period,
            orders: sorted,
            pinhole_width,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn orders(&self) -> &[i32] {
        &self.orders
    }

    pub fn pinhole_width(&self) -> f64 {
        self.pinhole_width
    }

    /// Gaussian pinhole transmission M₀(z h/d) = exp(−z²/2ξ²).
    pub fn pinhole_transmission(&self, z: f64) -> f64 {
        (-z * z / (2.0 * self.pinhole_width * self.pinhole_width)).exp()
    }
}

/// Wentzel amplitudes f_n = f(n·reference) for every order of the mask.
pub fn wentzel_amplitudes(
    mask: &MaskSpec,
    reference: MillerIndex,
    crystal: &CrystalSpec,
    beam: &BeamSpec,
) -> Result<Amplitudes> {
    mask.orders()
        .iter()
        .map(|&n| {
            let f = crystal.wentzel_amplitude(reference.scaled(n), beam)?;
            Ok((n, Complex64::new(f, 0.0)))
        })
        .collect()
}

/// How the Gaussian average over nutation angles is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MisalignmentMode {
    /// Closed form valid for any ratio of pinhole width to angle spread.
    General,
    /// Narrow-pinhole limit ξ ≪ σ_β.
    SmallPinhole,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alignment {
    Perfect,
    /// Gaussian spread of the nutation angle with standard deviation
    /// `sigma_beta` (rad).
    Nutation { sigma_beta: f64, mode: MisalignmentMode },
}

/// Hermitian coefficient matrix B_{n,n'} over the selected orders, together
/// with the detected electron position it is conditioned on.
#[derive(Debug, Clone, PartialEq)]
pub struct GratingCoefficients {
    orders: Vec<i32>,
    matrix: DMatrix<Complex64>,
    x: f64,
    y: f64,
    alignment: Alignment,
}

impl GratingCoefficients {
    pub fn orders(&self) -> &[i32] {
        &self.orders
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn electron_position(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn alignment(&self) -> Alignment {
        self.alignment
    }

    /// The same coefficients conditioned on a different electron x position.
    /// B does not depend on x; x only enters the fringe phase.
    pub fn with_x(mut self, x: f64) -> Self {
        self.x = x;
        self
    }

    fn index(&self, n: i32) -> Option<usize> {
        self.orders.binary_search(&n).ok()
    }

    /// B_{n,n'}, zero for orders outside the mask.
    pub fn get(&self, n: i32, n_prime: i32) -> Complex64 {
        match (self.index(n), self.index(n_prime)) {
            (Some(i), Some(j)) => self.matrix[(i, j)],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// Largest |n − n'| over the selected orders.
    pub fn max_harmonic(&self) -> i32 {
        self.orders.last().unwrap() - self.orders.first().unwrap()
    }

    /// Talbot coefficient B_n(ξ) = Σ_j B_{j,j+n} e^{iπξ(n+2j)}.
    pub fn talbot_coefficient(&self, n: i32, xi: f64) -> Complex64 {
        self.orders
            .iter()
            .filter_map(|&j| {
                let b = self.get(j, j + n);
                (b != Complex64::new(0.0, 0.0)).then(|| b * Complex64::from_polar(1.0, PI * xi * f64::from(n + 2 * j)))
            })
            .sum()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// Largest |B_{n,n'} − conj(B_{n',n})|.
    pub fn hermiticity_defect(&self) -> f64 {
        let m = &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let hermitian = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        hermitian
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

fn require_amplitudes(mask: &MaskSpec, amplitudes: &Amplitudes) -> Result<Vec<Complex64>> {
    mask.orders()
        .iter()
        .map(|n| {
            amplitudes
                .get(n)
                .copied()
                .ok_or_else(|| Error::Config(format!("no scattering amplitude for Bragg order {n}")))
        })
        .collect()
}

fn build(
    mask: &MaskSpec,
    amplitudes: &Amplitudes,
    (x, y): (f64, f64),
    alignment: Alignment,
    factor: impl Fn(i32, i32) -> f64,
) -> Result<GratingCoefficients> {
    let f = require_amplitudes(mask, amplitudes)?;
    let orders = mask.orders().to_vec();
    let k = orders.len();
    let matrix = DMatrix::from_fn(k, k, |i, j| f[i] * f[j].conj() * factor(orders[i], orders[j]));
    Ok(GratingCoefficients {
        orders,
        matrix,
        x,
        y,
        alignment,
    })
}

/// Perfectly aligned crystal: B_{n,n'} = f_n f_{n'}*, a rank-one matrix.
pub fn aligned_coefficients(
    mask: &MaskSpec,
    amplitudes: &Amplitudes,
    electron_position: (f64, f64),
) -> Result<GratingCoefficients> {
    build(mask, amplitudes, electron_position, Alignment::Perfect, |_, _| 1.0)
}

/// Coherence factor D_{n,n'}(y) between Bragg orders after averaging over a
/// Gaussian nutation-angle spread σ_β with Gaussian pinholes of width ξ.
pub fn misalignment_factor(
    n: i32,
    n_prime: i32,
    y: f64,
    mask: &MaskSpec,
    sigma_beta: f64,
    mode: MisalignmentMode,
) -> Result<f64> {
    require_positive("nutation angle spread", sigma_beta)?;
    let xi = mask.pinhole_width();
    let d = mask.period();
    let sum_sq = f64::from(n * n + n_prime * n_prime);
    let diff_sq = f64::from((n - n_prime) * (n - n_prime));
    let y_over_d = y / d;
    Ok(match mode {
        MisalignmentMode::General => {
            let s2 = sigma_beta * sigma_beta;
            let denom = xi * xi + sum_sq * s2;
            xi / denom.sqrt() * (-2.0 * PI * PI * diff_sq * s2 * xi * xi / denom * y_over_d * y_over_d).exp()
        }
        MisalignmentMode::SmallPinhole => {
            xi / (sigma_beta * sum_sq.sqrt())
                * (-2.0 * PI * PI * xi * xi * y_over_d * y_over_d * diff_sq / sum_sq).exp()
        }
    })
}

/// Reference evaluation of D_{n,n'} as the Gaussian β-average
/// ∫ dβ N(β; σ_β) e^{−(n²+n'²)β²/2ξ²} e^{2πi(n−n')yβ/d}, by quadrature.
pub fn misalignment_factor_quadrature(n: i32, n_prime: i32, y: f64, mask: &MaskSpec, sigma_beta: f64) -> Result<f64> {
    require_positive("nutation angle spread", sigma_beta)?;
    let xi = mask.pinhole_width();
    let sum_sq = f64::from(n * n + n_prime * n_prime);
    let k = 2.0 * PI * f64::from(n - n_prime) * y / mask.period();
    // Integrand is even in β; the imaginary part integrates to zero.
    let width = 1.0 / (1.0 / (sigma_beta * sigma_beta) + sum_sq / (xi * xi)).sqrt();
    let norm = 1.0 / ((2.0 * PI).sqrt() * sigma_beta);
    let est = quadrature::integrate(
        |b| {
            let g = (-b * b / (2.0 * sigma_beta * sigma_beta) - sum_sq * b * b / (2.0 * xi * xi)).exp();
            2.0 * norm * g * (k * b).cos()
        },
        0.0,
        14.0 * width,
        quadrature::Tolerance::absolute(1e-13).with_rel(1e-13).with_max_intervals(20_000),
    )?;
    Ok(est.value)
}

/// B_{n,n'} = f_n f_{n'}* D_{n,n'}(y) for a crystal with a nutation spread.
pub fn misaligned_coefficients(
    mask: &MaskSpec,
    amplitudes: &Amplitudes,
    sigma_beta: f64,
    mode: MisalignmentMode,
    electron_position: (f64, f64),
) -> Result<GratingCoefficients> {
    require_positive("nutation angle spread", sigma_beta)?;
    let y = electron_position.1;
    build(
        mask,
        amplitudes,
        electron_position,
        Alignment::Nutation { sigma_beta, mode },
        |n, m| misalignment_factor(n, m, y, mask, sigma_beta, mode).expect("σ_β checked above"),
    )
}

/// Builds coefficients for any alignment state.
pub fn coefficients(
    mask: &MaskSpec,
    amplitudes: &Amplitudes,
    alignment: Alignment,
    electron_position: (f64, f64),
) -> Result<GratingCoefficients> {
    match alignment {
        Alignment::Perfect => aligned_coefficients(mask, amplitudes, electron_position),
        Alignment::Nutation { sigma_beta, mode } => {
            misaligned_coefficients(mask, amplitudes, sigma_beta, mode, electron_position)
        }
    }
}

/// Norm ⟨ψ̄_in|ψ̄_in⟩ of the density-smeared Gaussian electron wavefunction,
/// closed form.
pub fn smeared_norm(crystal: &CrystalSpec, beam: &BeamSpec) -> f64 {
    let v = crystal.volume();
    let n = crystal.cell_count();
    let b = crystal.half_thickness();
    let kr2 = (beam.transverse_width() * crystal.radius()).powi(2);
    // 1 − e^{−2x} loses precision for small x.
    let bracket = 2.0 - (-(-2.0 * kr2).exp_m1()) / kr2;
    2.0 * n * n * b * b / (v * v) * bracket
}

/// The same norm as the radial quadrature ∫ρ̄²(r)|ψ_in(r)|² d²r with the
/// normalised beam |ψ_in|² = (2Δk²/π) e^{−2Δk²r²}.
pub fn smeared_norm_quadrature(crystal: &CrystalSpec, beam: &BeamSpec) -> Result<f64> {
    let k2 = beam.transverse_width().powi(2);
    let r_max = crystal.radius();
    let est = quadrature::integrate(
        |r| {
            let rho = crystal.projected_density(r).unwrap_or(0.0);
            2.0 * PI * r * rho * rho * (2.0 * k2 / PI) * (-2.0 * k2 * r * r).exp()
        },
        0.0,
        r_max,
        quadrature::Tolerance::absolute(0.0).with_rel(1e-12),
    )?;
    Ok(est.value)
}

/// Probability that the Bragg-filtered electron is detected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionProbability {
    pub closed_form: f64,
    pub quadrature: f64,
    /// Σ|f_n|² over the selected orders (m⁴).
    pub amplitude_weight: f64,
}

pub fn detection_probability(
    crystal: &CrystalSpec,
    beam: &BeamSpec,
    mask: &MaskSpec,
    amplitudes: &Amplitudes,
) -> Result<DetectionProbability> {
    let f = require_amplitudes(mask, amplitudes)?;
    let weight: f64 = f.iter().map(|z| z.norm_sqr()).sum();
    Ok(DetectionProbability {
        closed_form: smeared_norm(crystal, beam) * weight,
        quadrature: smeared_norm_quadrature(crystal, beam)? * weight,
        amplitude_weight: weight,
    })
}
