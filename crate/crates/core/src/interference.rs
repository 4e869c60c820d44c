//! Closed-form phase-space propagation of a Gaussian state through the
//! conditional grating: quantum and classical fringe patterns, carpets and
//! fringe metrics.
//!
//! The particle evolves freely for t₀, receives the grating transformation,
//! then evolves for t. Positions X are measured from the centre of the free
//! Gaussian envelope; patterns are reported against the relative coordinate
//! X − x̄D/d where x̄ is the electron position reduced modulo d.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::constants::PLANCK_H;
use crate::crystal::CrystalSpec;
use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::grating::GratingCoefficients;
use crate::macroscopicity::{spheroid_integral_with, ModificationParams};
use crate::optimize::golden_section_max;
use crate::physics::GaussianState;

/// Default number of position samples per pattern.
pub const DEFAULT_GRID_POINTS: usize = 2048;
/// Default half width of the position grid in units of σ̃_X.
pub const DEFAULT_GRID_HALF_WIDTH: f64 = 4.0;
/// Default number of time samples of a carpet.
pub const DEFAULT_CARPET_ROWS: usize = 256;

/// Relative imaginary residue above which a pattern evaluation is rejected.
const IMAGINARY_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionParams {
    t0: f64,
    t: f64,
    state: GaussianState,
    period: f64,
}

impl EvolutionParams {
    /// `t0` before and `t` after the grating; `period` is the grating period d.
    pub fn new(t0: f64, t: f64, state: GaussianState, period: f64) -> Result<Self> {
        Ok(Self {
            t0: require_positive("pre-diffraction time t0", t0)?,
            t: require_non_negative("post-diffraction time t", t)?,
            state,
            period: require_positive("grating period", period)?,
        })
    }

    pub fn with_t(&self, t: f64) -> Result<Self> {
        Self::new(self.t0, t, self.state, self.period)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &GaussianState {
        &self.state
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn mass(&self) -> f64 {
        self.state.mass()
    }

    /// T_M = M d²/h.
    pub fn talbot_time(&self) -> f64 {
        self.mass() * self.period * self.period / PLANCK_H
    }

    /// Talbot-coefficient argument t t₀ / (T_M (t + t₀)) of the broad-source
    /// regime, per unit harmonic order.
    pub fn shear(&self) -> f64 {
        self.t * self.t0 / (self.talbot_time() * (self.t + self.t0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatedWidths {
    pub sigma_x_tilde: f64,
    pub sigma_p_tilde: f64,
    /// Magnified fringe period D.
    pub period_d: f64,
    mass: f64,
    t: f64,
    grating_period: f64,
}

impl PropagatedWidths {
    /// Fringe reduction factor R_n = exp(−2π²n²(σ̃_P t/Md)²).
    pub fn reduction(&self, n: i32) -> f64 {
        let a = self.sigma_p_tilde * self.t / (self.mass * self.grating_period);
        (-2.0 * PI * PI * f64::from(n * n) * a * a).exp()
    }
}

pub fn propagated_widths(params: &EvolutionParams) -> PropagatedWidths {
    let s = params.state();
    let (sx, sp, m) = (s.sigma_x(), s.sigma_p(), s.mass());
    let total = params.t + params.t0;
    let spread = sp * total / m;
    let sigma_p_tilde = sp / (1.0 + (spread / sx).powi(2)).sqrt();
    let sigma_x_tilde = (sx * sx + spread * spread).sqrt();
    let r2 = (m * sx / sp).powi(2);
    let period_d = params.period * (total * total + r2) / (params.t0 * total + r2);
    PropagatedWidths {
        sigma_x_tilde,
        sigma_p_tilde,
        period_d,
        mass: m,
        t: params.t,
        grating_period: params.period,
    }
}

/// R_n additionally damped by the modification-induced decoherence:
/// R_n · exp{−3M²(t+t₀)/(2√(2π)m₀²τ₀) · [nσ_q d t t₀/(T_M(t+t₀))]² · I(σ_qR_M, σ_q b_M)}.
pub fn decohered_reduction(
    reduction: f64,
    n: i32,
    params: &EvolutionParams,
    modification: &ModificationParams,
    crystal: &CrystalSpec,
) -> Result<f64> {
    if n == 0 {
        return Ok(reduction);
    }
    let sq = modification.sigma_q();
    let integral = spheroid_integral_with(sq * crystal.radius(), sq * crystal.half_thickness(), modification.kernel())?.value;
    let total = params.t + params.t0;
    let ratio = params.mass() / modification.reference_mass();
    let shift = f64::from(n) * sq * params.period * params.shear();
    let exponent = 3.0 * ratio * ratio * total / (2.0 * (2.0 * PI).sqrt() * modification.tau0()) * shift * shift * integral;
    Ok(reduction * (-exponent).exp())
}

/// Which expression of the quantum pattern to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PatternModel {
    /// Every (n, j) term keeps its own displaced Gaussian envelope.
    #[default]
    Full,
    /// Envelope displacements of order d are neglected; valid when
    /// σ_P ≫ 2πħ/d, i.e. a broad envelope.
    BroadEnvelope,
}

impl PatternModel {
    pub fn name(self) -> &'static str {
        match self {
            PatternModel::Full => "full",
            PatternModel::BroadEnvelope => "broad",
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Term {
    n: i32,
    coeff: Complex64,
    shift: f64,
}

/// Precomputed Fourier terms of the quantum and classical densities for one
/// set of coefficients and evolution times.
#[derive(Debug, Clone)]
pub struct FringeModel {
    params: EvolutionParams,
    widths: PropagatedWidths,
    x: f64,
    y: f64,
    max_harmonic: i32,
    quantum_terms: Vec<Term>,
    classical_terms: Vec<Term>,
    broad_terms: Vec<Term>,
}

impl FringeModel {
    pub fn new(coeffs: &GratingCoefficients, params: &EvolutionParams) -> Result<Self> {
        Self::build(coeffs, params, None)
    }

    /// Includes the modification-induced damping of every harmonic.
    pub fn with_decoherence(
        coeffs: &GratingCoefficients,
        params: &EvolutionParams,
        modification: &ModificationParams,
        crystal: &CrystalSpec,
    ) -> Result<Self> {
        Self::build(coeffs, params, Some((modification, crystal)))
    }

    fn build(
        coeffs: &GratingCoefficients,
        params: &EvolutionParams,
        decoherence: Option<(&ModificationParams, &CrystalSpec)>,
    ) -> Result<Self> {
        if coeffs.orders().is_empty() {
            return Err(Error::Config("empty Bragg order set".into()));
        }
        let widths = propagated_widths(params);
        let (x, y) = coeffs.electron_position();
        let d = params.period;
        let big_d = widths.period_d;
        let tm = params.talbot_time();
        let t = params.t;
        let max_harmonic = coeffs.max_harmonic();

        let mut quantum_terms = Vec::new();
        let mut classical_terms = Vec::new();
        let mut broad_terms = Vec::new();
        for n in -max_harmonic..=max_harmonic {
            let mut r = widths.reduction(n);
            if let Some((m, c)) = decoherence {
                r = decohered_reduction(r, n, params, m, c)?;
            }
            let electron_phase = Complex64::from_polar(r, -2.0 * PI * f64::from(n) * x / d);
            for &j in coeffs.orders() {
                let b = coeffs.get(j, j + n);
                if b == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let nf = f64::from(n);
                let jf = f64::from(j);
                let phase = PI * nf * (2.0 * jf + nf) * t * d / (tm * big_d);
                quantum_terms.push(Term {
                    n,
                    coeff: electron_phase * b * Complex64::from_polar(1.0, phase),
                    shift: (jf + nf / 2.0) * d * t / tm,
                });
            }
            let b0 = coeffs.talbot_coefficient(n, 0.0);
            let bq = coeffs.talbot_coefficient(n, f64::from(n) * params.shear());
            classical_terms.push(Term {
                n,
                coeff: electron_phase * b0,
                shift: 0.0,
            });
            broad_terms.push(Term {
                n,
                coeff: electron_phase * bq,
                shift: 0.0,
            });
        }
        Ok(Self {
            params: *params,
            widths,
            x,
            y,
            max_harmonic,
            quantum_terms,
            classical_terms,
            broad_terms,
        })
    }

    pub fn widths(&self) -> &PropagatedWidths {
        &self.widths
    }

    pub fn params(&self) -> &EvolutionParams {
        &self.params
    }

    /// Width of the single envelope used by the broad-envelope model,
    /// σ_P(t+t₀)/M.
    pub fn broad_width(&self) -> f64 {
        let s = self.params.state();
        s.sigma_p() * (self.params.t + self.params.t0) / s.mass()
    }

    /// Envelope width used by `model`.
    pub fn envelope_width(&self, model: PatternModel) -> f64 {
        match model {
            PatternModel::Full => self.widths.sigma_x_tilde,
            PatternModel::BroadEnvelope => self.broad_width(),
        }
    }

    /// Absolute position of the relative-coordinate origin, x̄D/d.
    pub fn envelope_offset(&self) -> f64 {
        let d = self.params.period;
        let reduced = self.x - d * (self.x / d).round();
        reduced * self.widths.period_d / d
    }

    fn sum(&self, terms: &[Term], position: f64, width: f64) -> Complex64 {
        let k = 2.0 * PI / self.widths.period_d;
        let norm = 1.0 / ((2.0 * PI).sqrt() * width);
        let mut total = Complex64::new(0.0, 0.0);
        for term in terms {
            let u = (position + term.shift) / width;
            let env = norm * (-0.5 * u * u).exp();
            total += term.coeff * Complex64::from_polar(env, k * f64::from(term.n) * position);
        }
        total
    }

    /// Quantum density at absolute position X (complex; the imaginary part
    /// is roundoff).
    pub fn quantum_at(&self, position: f64, model: PatternModel) -> Complex64 {
        match model {
            PatternModel::Full => self.sum(&self.quantum_terms, position, self.widths.sigma_x_tilde),
            PatternModel::BroadEnvelope => self.sum(&self.broad_terms, position, self.broad_width()),
        }
    }

    /// Classical shadow density at absolute position X.
    pub fn classical_at(&self, position: f64, model: PatternModel) -> Complex64 {
        self.sum(&self.classical_terms, position, self.envelope_width(model))
    }

    /// Samples both densities on a grid of relative positions X − x̄D/d.
    pub fn pattern(&self, relative_positions: &[f64], model: PatternModel) -> Result<FringePattern> {
        let offset = self.envelope_offset();
        let mut quantum = Vec::with_capacity(relative_positions.len());
        let mut classical = Vec::with_capacity(relative_positions.len());
        let mut residue = 0.0f64;
        for &rel in relative_positions {
            let position = rel + offset;
            let q = self.quantum_at(position, model);
            let c = self.classical_at(position, model);
            residue = residue.max(q.im.abs()).max(c.im.abs());
            quantum.push(q.re);
            classical.push(c.re);
        }
        let scale = quantum
            .iter()
            .chain(&classical)
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let imaginary_residue = if scale > 0.0 { residue / scale } else { residue };
        if imaginary_residue > IMAGINARY_LIMIT {
            return Err(Error::Numerical {
                message: "fringe pattern has a non-negligible imaginary part".into(),
                estimate: scale,
                error: residue,
                evaluations: relative_positions.len(),
            });
        }
        Ok(FringePattern {
            relative_positions: relative_positions.to_vec(),
            quantum,
            classical,
            period_d: self.widths.period_d,
            sigma_x_tilde: self.widths.sigma_x_tilde,
            envelope_width: self.envelope_width(model),
            envelope_offset: offset,
            grating_period: self.params.period,
            t: self.params.t,
            t0: self.params.t0,
            electron_position: (self.x, self.y),
            max_harmonic: self.max_harmonic,
            model,
            imaginary_residue,
        })
    }
}

/// Sampled quantum and classical position densities.
///
/// Densities are per unit coefficient weight: they carry the units of B and
/// are meaningful only after normalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct FringePattern {
    pub relative_positions: Vec<f64>,
    pub quantum: Vec<f64>,
    pub classical: Vec<f64>,
    pub period_d: f64,
    pub sigma_x_tilde: f64,
    /// Width of the Gaussian envelope of this model.
    pub envelope_width: f64,
    /// Absolute position of the relative origin.
    pub envelope_offset: f64,
    pub grating_period: f64,
    pub t: f64,
    pub t0: f64,
    pub electron_position: (f64, f64),
    pub max_harmonic: i32,
    pub model: PatternModel,
    /// Largest |Im w| / max |Re w| seen while sampling.
    pub imaginary_residue: f64,
}

impl FringePattern {
    /// Gaussian envelope (unnormalised, peak 1) at a relative position.
    pub fn envelope(&self, relative: f64) -> f64 {
        let u = (relative + self.envelope_offset) / self.envelope_width;
        (-0.5 * u * u).exp()
    }

    /// Free Gaussian of a particle that never met the grating, in units
    /// of the classical pattern's mean weight (the dashed reference curve).
    pub fn free_envelope(&self) -> Vec<f64> {
        let mean = self.classical.iter().sum::<f64>()
            / self.relative_positions.iter().map(|&r| self.envelope(r)).sum::<f64>();
        self.relative_positions.iter().map(|&r| mean * self.envelope(r)).collect()
    }

    /// Smallest density relative to the largest, over both densities.
    pub fn min_relative_density(&self) -> f64 {
        let max = self.quantum.iter().chain(&self.classical).fold(0.0f64, |m, v| m.max(*v));
        let min = self.quantum.iter().chain(&self.classical).fold(f64::INFINITY, |m, v| m.min(*v));
        min / max
    }

    /// Visibility of the quantum fringes.
    pub fn visibility(&self) -> f64 {
        self.density_visibility(&self.quantum)
    }

    pub fn classical_visibility(&self) -> f64 {
        self.density_visibility(&self.classical)
    }

    fn density_visibility(&self, density: &[f64]) -> f64 {
        let (positions, values): (Vec<f64>, Vec<f64>) = self
            .relative_positions
            .iter()
            .zip(density)
            .filter(|(r, _)| (**r + self.envelope_offset).abs() <= self.envelope_width)
            .map(|(&r, &v)| (r, v / self.envelope(r)))
            .unzip();
        fringe_visibility(&positions, &values, self.period_d, VISIBILITY_HARMONICS)
    }

    /// Normalised L1 distance between the quantum and classical densities.
    pub fn quantum_classical_distance(&self) -> f64 {
        normalized_l1(&self.quantum, &self.classical)
    }

    /// Fringe period of the quantum density; see [`fringe_period`].
    pub fn fringe_period(&self) -> Result<f64> {
        let guess = self.grating_period * (1.0 + self.t / self.t0);
        fringe_period(self, guess)
    }
}

/// Harmonics of the period-D Fourier series fitted for visibility.
pub const VISIBILITY_HARMONICS: usize = 4;

/// Normalised L1 distance Σ|p/Σp − q/Σq|; 0 for two zero densities.
pub fn normalized_l1(p: &[f64], q: &[f64]) -> f64 {
    let sp: f64 = p.iter().sum();
    let sq: f64 = q.iter().sum();
    if sp == 0.0 || sq == 0.0 {
        return if sp == sq { 0.0 } else { 2.0 };
    }
    p.iter().zip(q).map(|(a, b)| (a / sp - b / sq).abs()).sum()
}

/// Michelson contrast (max − min)/(max + min) of a least-squares Fourier
/// series with fundamental period `period` and `harmonics` harmonics,
/// fitted to the samples. Flat or non-positive data give 0; the result is
/// clamped to [0, 1].
pub fn fringe_visibility(positions: &[f64], density: &[f64], period: f64, harmonics: usize) -> f64 {
    let cols = 1 + 2 * harmonics;
    if positions.len() < cols || period <= 0.0 {
        return 0.0;
    }
    let k = 2.0 * PI / period;
    let design = DMatrix::from_fn(positions.len(), cols, |i, c| {
        if c == 0 {
            1.0
        } else {
            let h = c.div_ceil(2) as f64;
            let arg = h * k * positions[i];
            if c % 2 == 1 {
                arg.cos()
            } else {
                arg.sin()
            }
        }
    });
    let rhs = DVector::from_column_slice(density);
    let normal = design.transpose() * &design;
    let Some(coeffs) = normal.cholesky().map(|c| c.solve(&(design.transpose() * rhs))) else {
        return 0.0;
    };
    let samples = 512;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in 0..samples {
        let u = k * period * s as f64 / samples as f64;
        let mut v = coeffs[0];
        for h in 1..=harmonics {
            let (sn, cs) = (h as f64 * u).sin_cos();
            v += coeffs[2 * h - 1] * cs + coeffs[2 * h] * sn;
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi <= 0.0 || hi + lo <= 0.0 {
        return 0.0;
    }
    ((hi - lo) / (hi + lo)).clamp(0.0, 1.0)
}

/// Estimates the fringe period of the quantum density near `guess`.
///
/// The density is divided by its envelope, mean-subtracted and Hann-windowed
/// over |X| ≤ 3 envelope widths; the period is the one whose harmonic
/// comb (1/P, 2/P, …, 4/P) collects the most spectral power within ±20 % of
/// the guess. A maximum on the edge of that range is an error.
pub fn fringe_period(pattern: &FringePattern, guess: f64) -> Result<f64> {
    require_positive("period guess", guess)?;
    let (xs, mut g): (Vec<f64>, Vec<f64>) = pattern
        .relative_positions
        .iter()
        .zip(&pattern.quantum)
        .filter(|(r, _)| (**r + pattern.envelope_offset).abs() <= 3.0 * pattern.envelope_width)
        .map(|(&r, &v)| (r, v / pattern.envelope(r)))
        .unzip();
    if xs.len() < 16 {
        return Err(Error::Config("too few samples inside the envelope for a period fit".into()));
    }
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    let (x0, x1) = (xs[0], xs[xs.len() - 1]);
    for (v, &x) in g.iter_mut().zip(&xs) {
        let hann = 0.5 - 0.5 * (2.0 * PI * (x - x0) / (x1 - x0)).cos();
        *v = (*v - mean) * hann;
    }
    let power = |f: f64| -> f64 {
        (1..=4)
            .map(|h| {
                let w = 2.0 * PI * f * h as f64;
                let (mut re, mut im) = (0.0, 0.0);
                for (v, &x) in g.iter().zip(&xs) {
                    let (s, c) = (w * x).sin_cos();
                    re += v * c;
                    im -= v * s;
                }
                re * re + im * im
            })
            .sum()
    };
    let (f_lo, f_hi) = (1.0 / (1.2 * guess), 1.0 / (0.8 * guess));
    let steps = 400;
    let scan: Vec<f64> = (0..=steps)
        .map(|i| power(f_lo + (f_hi - f_lo) * i as f64 / steps as f64))
        .collect();
    let best = scan
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty scan");
    if best == 0 || best == steps {
        return Err(Error::Numerical {
            message: "fringe period fit ran into the edge of its search range".into(),
            estimate: guess,
            error: f64::NAN,
            evaluations: steps + 1,
        });
    }
    let df = (f_hi - f_lo) / steps as f64;
    let fc = f_lo + df * best as f64;
    let peak = golden_section_max(power, fc - df, fc + df, 1e-9 * fc, 0.0);
    Ok(1.0 / peak.x)
}

/// Uniform grid of `points` relative positions over |X| ≤ half_width.
pub fn uniform_grid(half_width: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| -half_width + 2.0 * half_width * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Default grid: 2048 points over |X| ≤ 4σ̃_X.
pub fn default_grid(widths: &PropagatedWidths) -> Vec<f64> {
    uniform_grid(DEFAULT_GRID_HALF_WIDTH * widths.sigma_x_tilde, DEFAULT_GRID_POINTS)
}

/// Quantum pattern sampled on relative positions (full model).
pub fn quantum_pattern(grid: &[f64], coeffs: &GratingCoefficients, params: &EvolutionParams) -> Result<Vec<f64>> {
    Ok(FringeModel::new(coeffs, params)?.pattern(grid, PatternModel::Full)?.quantum)
}

/// Classical shadow pattern sampled on relative positions.
pub fn classical_pattern(grid: &[f64], coeffs: &GratingCoefficients, params: &EvolutionParams) -> Result<Vec<f64>> {
    Ok(FringeModel::new(coeffs, params)?.pattern(grid, PatternModel::Full)?.classical)
}

/// Quantum pattern with the single broad envelope.
pub fn broad_envelope_pattern(
    grid: &[f64],
    coeffs: &GratingCoefficients,
    params: &EvolutionParams,
) -> Result<Vec<f64>> {
    Ok(FringeModel::new(coeffs, params)?.pattern(grid, PatternModel::BroadEnvelope)?.quantum)
}

/// Time-resolved fringe patterns, each row scaled to a maximum of 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Carpet {
    pub times: Vec<f64>,
    pub relative_positions: Vec<f64>,
    /// One row per time.
    pub quantum: Vec<Vec<f64>>,
    pub classical: Vec<Vec<f64>>,
    pub model: PatternModel,
}

fn normalize_row(mut row: Vec<f64>) -> Vec<f64> {
    let max = row.iter().fold(0.0f64, |m, v| m.max(*v));
    if max > 0.0 {
        row.iter_mut().for_each(|v| *v /= max);
    }
    row
}

/// Evaluates the pattern at every time in `times` (strictly increasing,
/// non-negative). Rows are computed in parallel; output order follows
/// `times`.
pub fn carpet(
    times: &[f64],
    relative_positions: &[f64],
    coeffs: &GratingCoefficients,
    params: &EvolutionParams,
    model: PatternModel,
) -> Result<Carpet> {
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("carpet times must be strictly increasing".into()));
    }
    if let Some(&t) = times.first() {
        require_non_negative("carpet time", t)?;
    }
    let rows = times
        .par_iter()
        .map(|&t| {
            let p = params.with_t(t)?;
            let pattern = FringeModel::new(coeffs, &p)?.pattern(relative_positions, model)?;
            Ok((normalize_row(pattern.quantum), normalize_row(pattern.classical)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (quantum, classical) = rows.into_iter().unzip();
    Ok(Carpet {
        times: times.to_vec(),
        relative_positions: relative_positions.to_vec(),
        quantum,
        classical,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::AMU;
    use crate::grating::{aligned_coefficients, MaskSpec};
    use std::collections::BTreeMap;

    fn setup(orders: &[i32]) -> (GratingCoefficients, EvolutionParams) {
        let d = 192e-12;
        let mask = MaskSpec::new(d, orders, 1e-3).unwrap();
        let amps: BTreeMap<i32, Complex64> = orders
            .iter()
            .map(|&n| (n, Complex64::new(1.0 / f64::from(n.abs()), 0.0)))
            .collect();
        let coeffs = aligned_coefficients(&mask, &amps, (0.0, 0.0)).unwrap();
        let state = crate::physics::source_state(2e9 * AMU, 2.0 * PI * 305e3, 12e-6).unwrap();
        let tm = 2e9 * AMU * d * d / PLANCK_H;
        (coeffs, EvolutionParams::new(tm, tm, state, d).unwrap())
    }

    #[test]
    fn no_post_evolution() {
        let (_, p) = setup(&[-1, 1]);
        let w = propagated_widths(&p.with_t(0.0).unwrap());
        assert!((w.period_d / p.period() - 1.0).abs() < 1e-15);
        for n in -4..=4 {
            assert_eq!(w.reduction(n), 1.0);
        }
    }

    #[test]
    fn width_product() {
        let (_, p) = setup(&[-1, 1]);
        let w = propagated_widths(&p);
        let s = p.state();
        assert!((w.sigma_x_tilde * w.sigma_p_tilde / (s.sigma_x() * s.sigma_p()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_order_has_no_fringes() {
        let (c, p) = setup(&[1]);
        let m = FringeModel::new(&c, &p).unwrap();
        let grid = default_grid(m.widths());
        // a single Gaussian displaced by d t/T_M: only the envelope slope remains
        let pat = m.pattern(&grid, PatternModel::Full).unwrap();
        assert!(pat.visibility() < 1e-2, "{}", pat.visibility());
        let broad = m.pattern(&grid, PatternModel::BroadEnvelope).unwrap();
        assert!(broad.visibility() < 1e-9, "{}", broad.visibility());
    }

    #[test]
    fn pure_cosine_visibility() {
        let period = 1.0;
        let xs = uniform_grid(10.0, 1001);
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * (1.0 + (2.0 * PI * x / period).cos())).collect();
        assert!((fringe_visibility(&xs, &ys, period, 4) - 1.0).abs() < 1e-9);
        let flat = vec![3.0; xs.len()];
        assert!(fringe_visibility(&xs, &flat, period, 4) < 1e-12);
        let half: Vec<f64> = xs.iter().map(|x| 1.0 + 0.5 * (2.0 * PI * x / period).sin()).collect();
        assert!((fringe_visibility(&xs, &half, period, 4) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn l1_distance() {
        assert_eq!(normalized_l1(&[1.0, 1.0], &[2.0, 2.0]), 0.0);
        assert!((normalized_l1(&[1.0, 0.0], &[0.0, 1.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn carpet_rejects_unsorted_times() {
        let (c, p) = setup(&[-1, 1]);
        assert!(carpet(&[1.0, 0.5], &[0.0], &c, &p, PatternModel::Full).is_err());
    }
}
