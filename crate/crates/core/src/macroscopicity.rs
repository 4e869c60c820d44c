//! Macrorealistic-modification decoherence and the empirical macroscopicity.
//!
//! A minimal modification adds Gaussian momentum kicks of width ħσ_q at rate
//! 1/τ₀ (scaled by (M/m₀)² through the mass form factor). Observing the n = 2
//! quantum fringes with at least half of their predicted contrast excludes
//! τ₀ ≤ τ_max(σ_q); the macroscopicity is μ = log₁₀ max_{σ_q} τ_max.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;

use crate::constants::ELECTRON_MASS;
use crate::crystal::CrystalSpec;
use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::optimize::golden_section_max;
use crate::quadrature::{self, Estimate, Tolerance};
use crate::special::j1_over_x;

/// Radial cut-off of the integration domain in the scaled coordinates; the
/// Gaussian weight beyond it is below e^{−72} ≈ 5×10⁻³².
pub const DOMAIN_CUTOFF: f64 = 12.0;

/// Largest admissible σ_q (1/m): momentum widths stay super-atomic,
/// 1/σ_q ≥ 1 nm.
pub const MAX_SIGMA_Q: f64 = 1e9;

/// Absolute tolerance of the spheroid double integral. The integral is also
/// held to [`INTEGRAL_REL_TOLERANCE`], which is the binding limit once
/// I(α, β) drops below 10⁻² (large σ_q).
pub const INTEGRAL_TOLERANCE: f64 = 1e-8;
pub const INTEGRAL_REL_TOLERANCE: f64 = 1e-9;

/// Power of the form factor j₁(s)/s inside the spheroid integral.
///
/// The decoherence rate contains |ρ̃_M(q)|² = 9M²[j₁(s)/s]², which is what
/// [`Kernel::Squared`] integrates. [`Kernel::Linear`] keeps a single power of
/// j₁(s)/s; it is retained for comparison and for its simple analytic value
/// at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    Linear,
    #[default]
    Squared,
}

impl Kernel {
    fn eval(self, s: f64) -> f64 {
        let g = j1_over_x(s);
        match self {
            Kernel::Linear => g,
            Kernel::Squared => g * g,
        }
    }

    /// I(0, 0): ∫₀^∞ ξ³e^{−ξ²/2}dξ · ∫₀^∞ e^{−ξ²/2}dξ = 2·√(π/2), times
    /// 1/3 (linear) or 1/9 (squared).
    pub fn origin_value(self) -> f64 {
        let gauss = 2.0 * (PI / 2.0).sqrt();
        match self {
            Kernel::Linear => gauss / 3.0,
            Kernel::Squared => gauss / 9.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Linear => "linear",
            Kernel::Squared => "squared",
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Kernel::Linear),
            "squared" => Ok(Kernel::Squared),
            other => Err(Error::Config(format!("unknown spheroid kernel `{other}` (expected linear|squared)"))),
        }
    }
}

/// Modification parameters (τ₀, σ_q, m₀).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModificationParams {
    tau0: f64,
    sigma_q: f64,
    reference_mass: f64,
    kernel: Kernel,
}

impl ModificationParams {
    /// Reference mass defaults to the electron mass and the kernel to
    /// [`Kernel::Squared`].
    pub fn new(tau0: f64, sigma_q: f64) -> Result<Self> {
        require_positive("modification time τ₀", tau0)?;
        require_positive("modification momentum width σ_q", sigma_q)?;
        if sigma_q > MAX_SIGMA_Q * (1.0 + 1e-12) {
            return Err(Error::Domain {
                what: "modification momentum width σ_q above 1/(1 nm)",
                value: sigma_q,
            });
        }
        Ok(Self {
            tau0,
            sigma_q,
            reference_mass: ELECTRON_MASS,
            kernel: Kernel::default(),
        })
    }

    pub fn with_reference_mass(self, reference_mass: f64) -> Result<Self> {
        Ok(Self {
            reference_mass: require_positive("reference mass", reference_mass)?,
            ..self
        })
    }

    pub fn with_kernel(self, kernel: Kernel) -> Self {
        Self { kernel, ..self }
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn sigma_q(&self) -> f64 {
        self.sigma_q
    }

    pub fn reference_mass(&self) -> f64 {
        self.reference_mass
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }
}

/// I(α, β) = ∫₀^∞∫₀^∞ dξ⊥ dξ_z ξ⊥³ e^{−(ξ⊥²+ξ_z²)/2} K(√(α²ξ⊥² + β²ξ_z²))
/// with the given kernel K.
///
/// Evaluated in polar coordinates (ξ⊥, ξ_z) = ρ(cos θ, sin θ), where the
/// kernel argument is ρ·√(α²cos²θ + β²sin²θ): the form-factor oscillations
/// then lie along ρ alone and the θ integrand stays smooth for any α, β.
pub fn spheroid_integral_with(alpha: f64, beta: f64, kernel: Kernel) -> Result<Estimate> {
    require_non_negative("spheroid integral α", alpha)?;
    require_non_negative("spheroid integral β", beta)?;
    let (a2, b2) = (alpha * alpha, beta * beta);
    let est = quadrature::integrate_2d(
        |theta, rho| {
            let (sn, cs) = theta.sin_cos();
            let c = (a2 * cs * cs + b2 * sn * sn).sqrt();
            let r2 = rho * rho;
            cs * cs * cs * r2 * r2 * (-r2 / 2.0).exp() * kernel.eval(rho * c)
        },
        (0.0, PI / 2.0),
        (0.0, DOMAIN_CUTOFF),
        Tolerance::absolute(1e-3 * INTEGRAL_TOLERANCE)
            .with_rel(INTEGRAL_REL_TOLERANCE)
            .with_max_intervals(4000),
    )?;
    // accepted: within the absolute tolerance and 10⁻⁶ relative, down to the
    // absolute floor requested above
    let target = INTEGRAL_TOLERANCE.min(1e-6 * est.value.abs()).max(1e-3 * INTEGRAL_TOLERANCE);
    if est.error > target {
        return Err(Error::Numerical {
            message: format!("spheroid integral at (α, β) = ({alpha}, {beta}) did not converge"),
            estimate: est.value,
            error: est.error,
            evaluations: est.evaluations,
        });
    }
    Ok(est)
}

/// I(α, β) with the single-power kernel j₁(s)/s.
pub fn spheroid_integral(alpha: f64, beta: f64) -> Result<f64> {
    spheroid_integral_with(alpha, beta, Kernel::Linear).map(|e| e.value)
}

/// Γ(0) − Γ(ΔX) to lowest order in ΔX:
/// 9M²σ_q²ΔX² / (2√(2π) m₀² τ₀) · I(σ_q R_M, σ_q b_M).
pub fn gamma_difference(delta_x: f64, mass: f64, params: &ModificationParams, crystal: &CrystalSpec) -> Result<f64> {
    require_positive("particle mass", mass)?;
    let sq = params.sigma_q;
    let integral = spheroid_integral_with(sq * crystal.radius(), sq * crystal.half_thickness(), params.kernel)?.value;
    let ratio = mass / params.reference_mass;
    Ok(9.0 * ratio * ratio * sq * sq * delta_x * delta_x / (2.0 * (2.0 * PI).sqrt() * params.tau0) * integral)
}

/// Inputs of the τ_max bound. The pre-diffraction time is fixed to one
/// Talbot time; `time` is the post-diffraction time t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExclusionSetup {
    pub mass: f64,
    pub period: f64,
    pub time: f64,
    pub talbot_time: f64,
    pub crystal: CrystalSpec,
    pub reference_mass: f64,
    pub kernel: Kernel,
}

impl ExclusionSetup {
    /// τ_max(σ_q) = 6(M/m₀)²/(√(2π) ln 2) · t²/(t + T_M) · (σ_q d)² · I(σ_q R_M, σ_q b_M).
    ///
    /// The bound assumes t₀ = T_M; other pre-diffraction times change the
    /// prefactor.
    pub fn tau_max(&self, sigma_q: f64) -> Result<f64> {
        require_non_negative("σ_q", sigma_q)?;
        require_positive("post-diffraction time", self.time)?;
        require_positive("Talbot time", self.talbot_time)?;
        let integral = spheroid_integral_with(
            sigma_q * self.crystal.radius(),
            sigma_q * self.crystal.half_thickness(),
            self.kernel,
        )?
        .value;
        let ratio = self.mass / self.reference_mass;
        let t = self.time;
        Ok(6.0 * ratio * ratio / ((2.0 * PI).sqrt() * LN_2) * t * t / (t + self.talbot_time)
            * (sigma_q * self.period).powi(2)
            * integral)
    }
}

/// Free-function form of [`ExclusionSetup::tau_max`].
pub fn tau_max(
    sigma_q: f64,
    mass: f64,
    period: f64,
    time: f64,
    talbot_time: f64,
    crystal: &CrystalSpec,
    kernel: Kernel,
) -> Result<f64> {
    ExclusionSetup {
        mass,
        period,
        time,
        talbot_time,
        crystal: *crystal,
        reference_mass: ELECTRON_MASS,
        kernel,
    }
    .tau_max(sigma_q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBounds {
    pub sigma_q_min: f64,
    pub sigma_q_max: f64,
    /// Points of the log-spaced bracketing scan.
    pub scan_points: usize,
}

impl Default for SearchBounds {
    /// σ_q ∈ [10⁵, 10⁹] 1/m; the upper end corresponds to 1/σ_q ≥ 1 nm.
    fn default() -> Self {
        Self {
            sigma_q_min: 1e5,
            sigma_q_max: 1e9,
            scan_points: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroResult {
    /// log₁₀ of the largest excluded τ₀ in seconds.
    pub mu: f64,
    pub argmax_sigma_q: f64,
    pub tau_max: f64,
    /// Bracketing scan (σ_q, τ_max) in increasing σ_q.
    pub curve: Vec<(f64, f64)>,
    /// The maximum sits at a search bound: the bound, not the physics,
    /// limits μ.
    pub boundary_maximum: bool,
}

/// Maximises τ_max over log σ_q: a log-spaced scan brackets the peak, then a
/// golden-section search refines it to 10⁻⁴ relative in τ_max.
pub fn macroscopicity_mu(setup: &ExclusionSetup, bounds: &SearchBounds) -> Result<MacroResult> {
    let lo = require_positive("σ_q lower bound", bounds.sigma_q_min)?.ln();
    let hi = require_positive("σ_q upper bound", bounds.sigma_q_max)?.ln();
    if hi <= lo || bounds.scan_points < 3 {
        return Err(Error::Config("σ_q search needs min < max and at least 3 scan points".into()));
    }
    let step = (hi - lo) / (bounds.scan_points - 1) as f64;
    let curve = (0..bounds.scan_points)
        .into_par_iter()
        .map(|i| {
            let sq = (lo + step * i as f64).exp();
            setup.tau_max(sq).map(|tau| (sq, tau))
        })
        .collect::<Result<Vec<_>>>()?;

    let best = curve
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .expect("scan has points");
    let last = curve.len() - 1;
    let a = lo + step * best.saturating_sub(1) as f64;
    let b = lo + step * (best + 1).min(last) as f64;

    let mut failure = None;
    let refined = golden_section_max(
        |log_sq| match setup.tau_max(log_sq.exp()) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        a,
        b,
        1e-9,
        1e-4,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let (argmax, tau) = if refined.value >= curve[best].1 {
        (refined.x.exp(), refined.value)
    } else {
        curve[best]
    };
    let log_arg = argmax.ln();
    let boundary_maximum =
        (best == 0 && log_arg - lo < 1e-3 * step) || (best == last && hi - log_arg < 1e-3 * step);
    Ok(MacroResult {
        mu: tau.log10(),
        argmax_sigma_q: argmax,
        tau_max: tau,
        curve,
        boundary_maximum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_values_of_both_kernels() {
        for kernel in [Kernel::Linear, Kernel::Squared] {
            let e = spheroid_integral_with(0.0, 0.0, kernel).unwrap();
            assert!((e.value - kernel.origin_value()).abs() < 1e-9, "{kernel:?} {}", e.value);
        }
        assert!((Kernel::Linear.origin_value() - 0.8356).abs() < 1e-4);
    }

    #[test]
    fn decays_for_large_alpha() {
        let small = spheroid_integral(1.0, 0.5).unwrap();
        let large = spheroid_integral(200.0, 0.5).unwrap();
        assert!(large < 0.01 * small, "{large} vs {small}");
    }

    #[test]
    fn rejects_negative_arguments() {
        assert!(spheroid_integral(-1.0, 0.0).is_err());
    }

    #[test]
    fn gamma_difference_scaling() {
        let c = CrystalSpec::silicon(109e-9, 30e-9).unwrap();
        let p = ModificationParams::new(1e16, 1e8).unwrap();
        let m = 2e9 * crate::constants::AMU;
        assert_eq!(gamma_difference(0.0, m, &p, &c).unwrap(), 0.0);
        let g1 = gamma_difference(1e-11, m, &p, &c).unwrap();
        let g2 = gamma_difference(2e-11, m, &p, &c).unwrap();
        let g3 = gamma_difference(1e-11, 2.0 * m, &p, &c).unwrap();
        assert!((g2 / g1 - 4.0).abs() < 1e-12);
        assert!((g3 / g1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn tau_max_vanishes_at_zero_sigma() {
        let c = CrystalSpec::silicon(109e-9, 30e-9).unwrap();
        let tau = tau_max(0.0, 1e-17, 192e-12, 1e-3, 1.8e-4, &c, Kernel::Squared).unwrap();
        assert_eq!(tau, 0.0);
    }

    #[test]
    fn kernel_parses() {
        assert_eq!("squared".parse::<Kernel>().unwrap(), Kernel::Squared);
        assert!("cubic".parse::<Kernel>().is_err());
    }
}
