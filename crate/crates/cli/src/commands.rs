//! One pipeline per subcommand.

use endiff_core::constants::AMU;
use endiff_core::interference::{self, carpet, normalized_l1, uniform_grid};
use endiff_core::macroscopicity::macroscopicity_mu;
use endiff_core::systematics::{self, talbot_table, SystematicsReport};
use endiff_core::{Alignment, FringeModel, FringePattern, ModificationParams, Scenario, SearchBounds};

use crate::config::{fmt_number, in_section, RunConfig};
use crate::emit::{Column, Dataset, Layout};
use crate::error::CliError;

const PM: f64 = 1e-12;
const US: f64 = 1e-6;

/// Datasets to write plus the values reported on the summary line.
#[derive(Debug, Clone)]
pub struct Run {
    pub datasets: Vec<Dataset>,
    pub summary: Vec<(&'static str, f64)>,
    pub line: String,
    pub warnings: Vec<String>,
}

struct Setup {
    scenario: Scenario,
    talbot_time: f64,
}

fn setup(cfg: &RunConfig) -> Result<Setup, CliError> {
    let scenario = cfg.scenario()?;
    let talbot_time = scenario.talbot_time().map_err(in_section("source.mass"))?;
    Ok(Setup { scenario, talbot_time })
}

fn fringe_model(cfg: &RunConfig, s: &Scenario, talbot_time: f64) -> Result<FringeModel, CliError> {
    let coeffs = s.coefficients().map_err(in_section("mask"))?;
    let params = s.evolution().map_err(in_section("evolution"))?;
    match cfg.decoherence(talbot_time) {
        None => Ok(FringeModel::new(&coeffs, &params)?),
        Some((tau0, sigma_q)) => {
            let modification = ModificationParams::new(tau0, sigma_q)
                .and_then(|m| m.with_reference_mass(s.reference_mass))
                .map_err(in_section("decoherence"))?
                .with_kernel(s.kernel);
            Ok(FringeModel::with_decoherence(&coeffs, &params, &modification, &s.crystal()?)?)
        }
    }
}

fn grid(cfg: &RunConfig, envelope_width: f64) -> Vec<f64> {
    uniform_grid(cfg.number("grid.half_width") * envelope_width, cfg.usize("grid.points"))
}

/// Scales a density to unit integral over the grid, in 1/pm.
fn unit_integral(positions_pm: &[f64], density: &[f64]) -> Vec<f64> {
    let step = if positions_pm.len() > 1 {
        positions_pm[1] - positions_pm[0]
    } else {
        1.0
    };
    let total: f64 = density.iter().sum::<f64>() * step;
    density.iter().map(|v| v / total).collect()
}

fn pattern(cfg: &RunConfig, s: &Scenario, talbot_time: f64) -> Result<FringePattern, CliError> {
    let model = cfg.model();
    let fm = fringe_model(cfg, s, talbot_time)?;
    Ok(fm.pattern(&grid(cfg, fm.envelope_width(model)), model)?)
}

const DENSITY_NOTE: &str = "densities are scaled to unit integral over the sampled window";

pub fn fringes(cfg: &RunConfig) -> Result<Run, CliError> {
    let Setup { scenario: s, talbot_time } = setup(cfg)?;
    let p = pattern(cfg, &s, talbot_time)?;
    let x: Vec<f64> = p.relative_positions.iter().map(|r| r / PM).collect();
    let q = unit_integral(&x, &p.quantum);
    let c = unit_integral(&x, &p.classical);
    let e = unit_integral(&x, &p.free_envelope());
    let rows = (0..x.len()).map(|i| vec![x[i], q[i], c[i], e[i]]).collect();
    let ds = Dataset::table(
        "fringes",
        vec![
            Column::new("relative_position_pm", "pm"),
            Column::new("quantum_density", "1/pm"),
            Column::new("classical_density", "1/pm"),
            Column::new("free_envelope", "1/pm"),
        ],
        rows,
    )
    .note(DENSITY_NOTE)
    .note(format!("positions are relative to the envelope offset {} pm", fmt_number(p.envelope_offset / PM)))
    .note(format!("pattern model: {}", p.model.name()));
    let visibility = p.visibility();
    let distance = p.quantum_classical_distance();
    Ok(Run {
        line: format!(
            "fringes: t = {:.4} T_M, D = {:.3} pm, visibility {:.3} (classical {:.3}), L1(quantum, classical) = {:.4}",
            p.t / talbot_time,
            p.period_d / PM,
            visibility,
            p.classical_visibility(),
            distance
        ),
        summary: vec![
            ("t_s", p.t),
            ("t0_s", p.t0),
            ("talbot_time_s", talbot_time),
            ("magnified_period_m", p.period_d),
            ("sigma_x_tilde_m", p.sigma_x_tilde),
            ("envelope_width_m", p.envelope_width),
            ("visibility", visibility),
            ("classical_visibility", p.classical_visibility()),
            ("l1_distance", distance),
        ],
        datasets: vec![ds],
        warnings: residue_warning(&p),
    })
}

fn residue_warning(p: &FringePattern) -> Vec<String> {
    let mut warnings: Vec<String> = (p.imaginary_residue > 1e-12)
        .then(|| format!("imaginary residue {:.1e} in the sampled pattern", p.imaginary_residue))
        .into_iter()
        .collect();
    warnings.extend(sampling_warning(&p.relative_positions, p.period_d, p.max_harmonic));
    warnings
}

/// Flags grids too coarse to resolve the highest harmonic of period `period`.
fn sampling_warning(positions: &[f64], period: f64, max_harmonic: i32) -> Option<String> {
    let spacing = positions.get(1).zip(positions.first()).map(|(b, a)| b - a)?;
    let finest = period / f64::from(max_harmonic.max(1));
    (spacing > 0.5 * finest).then(|| {
        format!(
            "grid spacing {:.1} pm undersamples the finest fringe period {:.1} pm; raise grid.points",
            spacing / PM,
            finest / PM
        )
    })
}

pub fn classical(cfg: &RunConfig) -> Result<Run, CliError> {
    let Setup { scenario: s, talbot_time } = setup(cfg)?;
    let p = pattern(cfg, &s, talbot_time)?;
    let x: Vec<f64> = p.relative_positions.iter().map(|r| r / PM).collect();
    let c = unit_integral(&x, &p.classical);
    let e = unit_integral(&x, &p.free_envelope());
    let pattern_ds = Dataset::table(
        "classical",
        vec![
            Column::new("relative_position_pm", "pm"),
            Column::new("classical_density", "1/pm"),
            Column::new("free_envelope", "1/pm"),
        ],
        (0..x.len()).map(|i| vec![x[i], c[i], e[i]]).collect(),
    )
    .note(DENSITY_NOTE)
    .note(format!("pattern model: {}", p.model.name()));

    let coeffs = s.coefficients().map_err(in_section("mask"))?;
    let shear = s.evolution().map_err(in_section("evolution"))?.shear();
    let scale = coeffs.talbot_coefficient(0, 0.0).re;
    let coefficient_rows = (0..=coeffs.max_harmonic())
        .map(|n| {
            let shadow = coeffs.talbot_coefficient(n, 0.0) / scale;
            let wave = coeffs.talbot_coefficient(n, f64::from(n) * shear) / scale;
            vec![f64::from(n), shadow.re, shadow.im, wave.re, wave.im]
        })
        .collect();
    let coefficient_ds = Dataset::table(
        "talbot_coefficients",
        vec![
            Column::new("harmonic", "1"),
            Column::new("classical_re", "1"),
            Column::new("classical_im", "1"),
            Column::new("quantum_re", "1"),
            Column::new("quantum_im", "1"),
        ],
        coefficient_rows,
    )
    .note("coefficients are divided by the zeroth classical coefficient")
    .note(format!("quantum coefficients are evaluated at shear n*{}", fmt_number(shear)));
    let visibility = p.classical_visibility();
    Ok(Run {
        line: format!(
            "classical: t = {:.4} T_M, D = {:.3} pm, shadow visibility {:.3}, shear {:.4}",
            p.t / talbot_time,
            p.period_d / PM,
            visibility,
            shear
        ),
        summary: vec![
            ("t_s", p.t),
            ("magnified_period_m", p.period_d),
            ("classical_visibility", visibility),
            ("shear", shear),
        ],
        datasets: vec![pattern_ds, coefficient_ds],
        warnings: residue_warning(&p),
    })
}

pub fn carpet_run(cfg: &RunConfig) -> Result<Run, CliError> {
    let Setup { scenario: s, talbot_time } = setup(cfg)?;
    let model = cfg.model();
    let t_max = cfg.time("carpet.t_max", talbot_time);
    let rows = cfg.usize("carpet.rows");
    let times: Vec<f64> = (0..rows).map(|i| t_max * i as f64 / (rows - 1) as f64).collect();
    let coeffs = s.coefficients().map_err(in_section("mask"))?;
    let params = s.evolution().map_err(in_section("evolution"))?;
    let widest = FringeModel::new(&coeffs, &params.with_t(t_max)?)?;
    let positions = grid(cfg, widest.envelope_width(model));
    let c = carpet(&times, &positions, &coeffs, &params, model)?;

    let x_pm: Vec<f64> = positions.iter().map(|r| r / PM).collect();
    let t_us: Vec<f64> = times.iter().map(|t| t / US).collect();
    let matrix = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..x_pm.len())
            .map(|i| std::iter::once(x_pm[i]).chain(rows.iter().map(|r| r[i])).collect())
            .collect()
    };
    let grid_ds = |name: &str, rows: &[Vec<f64>]| Dataset {
        name: name.to_string(),
        columns: vec![
            Column::new("t", "us"),
            Column::new("relative_position", "pm"),
            Column::new("density", "1"),
        ],
        rows: matrix(rows),
        layout: Layout::Grid {
            corner: "X_pm\\t_us".into(),
            top: t_us.clone(),
        },
        notes: vec![
            "first row: times; first column: relative positions; each time column scaled to unit maximum".into(),
            format!("pattern model: {}", model.name()),
        ],
    };

    let t0 = params.t0();
    let d = params.period();
    let distances: Vec<f64> = c.quantum.iter().zip(&c.classical).map(|(q, k)| normalized_l1(q, k)).collect();
    let metric_rows = times
        .iter()
        .zip(&distances)
        .map(|(&t, &l1)| {
            let w = interference::propagated_widths(&params.with_t(t)?);
            Ok(vec![t / US, t / talbot_time, l1, w.period_d / PM, d * (1.0 + t / t0) / PM])
        })
        .collect::<Result<Vec<_>, endiff_core::Error>>()?;
    let metrics = Dataset::table(
        "carpet_metrics",
        vec![
            Column::new("t_us", "us"),
            Column::new("t_over_talbot", "1"),
            Column::new("l1_distance", "1"),
            Column::new("magnified_period_pm", "pm"),
            Column::new("geometric_period_pm", "pm"),
        ],
        metric_rows,
    );
    let (imax, lmax) = distances
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    Ok(Run {
        line: format!(
            "carpet: {} times to {:.3} T_M on {} positions, largest L1(quantum, classical) = {:.4} at t = {:.3} T_M",
            times.len(),
            t_max / talbot_time,
            positions.len(),
            lmax,
            times[imax] / talbot_time
        ),
        summary: vec![
            ("t_max_s", t_max),
            ("talbot_time_s", talbot_time),
            ("max_l1_distance", lmax),
            ("argmax_l1_t_s", times[imax]),
        ],
        datasets: vec![grid_ds("carpet_quantum", &c.quantum), grid_ds("carpet_classical", &c.classical), metrics],
        warnings: sampling_warning(&positions, d * (1.0 + times[0] / t0), coeffs.max_harmonic()).into_iter().collect(),
    })
}

pub fn misalign(cfg: &RunConfig) -> Result<Run, CliError> {
    let Setup { scenario: base, talbot_time } = setup(cfg)?;
    let misaligned = cfg.misalignment()?;
    let fractions = cfg.number_list("misalign.y_fractions");
    let model = cfg.model();

    let build = |alignment: Alignment, y: f64| -> Result<FringeModel, CliError> {
        let mut s = base.clone();
        s.alignment = alignment;
        s.electron_y = y;
        fringe_model(cfg, &s, talbot_time)
    };
    let aligned = build(Alignment::Perfect, base.electron_y)?;
    let positions = grid(cfg, aligned.envelope_width(model));
    let aligned_pattern = aligned.pattern(&positions, model)?;
    let aligned_visibility = aligned_pattern.visibility();

    let mut patterns = Vec::with_capacity(fractions.len());
    let mut table = Vec::with_capacity(fractions.len());
    for &f in &fractions {
        let y = f * base.radius;
        let p = build(misaligned, y)?.pattern(&positions, model)?;
        table.push(vec![y / 1e-9, f, aligned_visibility, p.visibility(), p.min_relative_density()]);
        patterns.push(p);
    }
    let x: Vec<f64> = positions.iter().map(|r| r / PM).collect();
    let mut columns = vec![Column::new("relative_position_pm", "pm"), Column::new("aligned_quantum", "1/pm")];
    columns.extend(fractions.iter().map(|f| Column::new(&format!("quantum_y{}r", fmt_number(*f)), "1/pm")));
    let densities: Vec<Vec<f64>> = std::iter::once(unit_integral(&x, &aligned_pattern.quantum))
        .chain(patterns.iter().map(|p| unit_integral(&x, &p.quantum)))
        .collect();
    let pattern_rows = (0..x.len())
        .map(|i| std::iter::once(x[i]).chain(densities.iter().map(|d| d[i])).collect())
        .collect();

    let visibilities: Vec<f64> = table.iter().map(|r| r[3]).collect();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| fractions[a].total_cmp(&fractions[b]));
    let monotone = order.windows(2).all(|w| visibilities[w[1]] <= visibilities[w[0]]);

    let sigma_beta = match misaligned {
        Alignment::Nutation { sigma_beta, .. } => sigma_beta,
        Alignment::Perfect => 0.0,
    };
    Ok(Run {
        line: format!(
            "misalign: aligned visibility {:.3}; misaligned {} over y/R = {}; monotone in |y|: {}",
            aligned_visibility,
            visibilities.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", "),
            fractions.iter().map(|f| fmt_number(*f)).collect::<Vec<_>>().join(", "),
            if monotone { "yes" } else { "no" }
        ),
        summary: vec![
            ("t_s", aligned_pattern.t),
            ("sigma_beta_rad", sigma_beta),
            ("aligned_visibility", aligned_visibility),
            ("monotone", if monotone { 1.0 } else { 0.0 }),
        ],
        datasets: vec![
            Dataset::table(
                "misalign",
                vec![
                    Column::new("y_nm", "nm"),
                    Column::new("y_over_radius", "1"),
                    Column::new("visibility_aligned", "1"),
                    Column::new("visibility_misaligned", "1"),
                    Column::new("min_relative_density", "1"),
                ],
                table,
            ),
            Dataset::table("misalign_patterns", columns, pattern_rows).note(DENSITY_NOTE),
        ],
        warnings: Vec::new(),
    })
}

pub fn macroscopicity(cfg: &RunConfig) -> Result<Run, CliError> {
    let Setup { scenario: s, talbot_time } = setup(cfg)?;
    let setup = s.exclusion().map_err(in_section("macro"))?;
    let bounds = SearchBounds {
        sigma_q_min: cfg.si("macro.sigma_q_min")?,
        sigma_q_max: cfg.si("macro.sigma_q_max")?,
        scan_points: cfg.usize("macro.scan_points"),
    };
    if bounds.sigma_q_min >= bounds.sigma_q_max {
        return Err(CliError::Config {
            key: Some("macro.sigma_q_max".into()),
            message: "must exceed macro.sigma_q_min".into(),
        });
    }
    if bounds.sigma_q_max > endiff_core::macroscopicity::MAX_SIGMA_Q * (1.0 + 1e-12) {
        return Err(CliError::Config {
            key: Some("macro.sigma_q_max".into()),
            message: format!(
                "must not exceed {} 1/m (resolution length below 1 nm)",
                fmt_number(endiff_core::macroscopicity::MAX_SIGMA_Q)
            ),
        });
    }
    let result = macroscopicity_mu(&setup, &bounds)?;
    let mut warnings = Vec::new();
    if result.boundary_maximum {
        warnings.push("tau_max peaks at a search bound; mu is limited by the bound".to_string());
    }
    let t0 = s.pre_time()?;
    if (t0 / talbot_time - 1.0).abs() > 1e-12 {
        warnings.push("the exclusion bound assumes a pre-diffraction time of one Talbot time".to_string());
    }
    let ds = Dataset::table(
        "macro",
        vec![Column::new("sigma_q_per_m", "1/m"), Column::new("tau_max_s", "s")],
        result.curve.iter().map(|&(q, tau)| vec![q, tau]).collect(),
    )
    .note(format!("kernel: {}", setup.kernel.name()))
    .note(format!(
        "mu = {} at sigma_q = {} 1/m",
        fmt_number(result.mu),
        fmt_number(result.argmax_sigma_q)
    ));
    Ok(Run {
        line: format!(
            "macro: mu = {:.3} at sigma_q = {:.4e} 1/m (tau_max = {:.4e} s, {} kernel)",
            result.mu,
            result.argmax_sigma_q,
            result.tau_max,
            setup.kernel.name()
        ),
        summary: vec![
            ("mu", result.mu),
            ("argmax_sigma_q_per_m", result.argmax_sigma_q),
            ("tau_max_s", result.tau_max),
            ("boundary_maximum", if result.boundary_maximum { 1.0 } else { 0.0 }),
        ],
        datasets: vec![ds],
        warnings,
    })
}

pub fn detect_prob(cfg: &RunConfig) -> Result<Run, CliError> {
    let Setup { scenario: s, .. } = setup(cfg)?;
    let p = s.detection_probability().map_err(in_section("mask"))?;
    let rel = (p.closed_form - p.quadrature).abs() / p.quadrature.abs();
    let mut warnings = Vec::new();
    if p.closed_form > 1.0 {
        warnings.push(format!(
            "detection probability {:.3} exceeds 1: the Wentzel amplitudes are not unitarity-bounded in this regime",
            p.closed_form
        ));
    }
    let ds = Dataset::table(
        "detect_prob",
        vec![
            Column::new("closed_form", "1"),
            Column::new("quadrature", "1"),
            Column::new("relative_difference", "1"),
            Column::new("amplitude_weight_pm4", "pm^4"),
        ],
        vec![vec![p.closed_form, p.quadrature, rel, p.amplitude_weight / PM.powi(4)]],
    );
    Ok(Run {
        line: format!(
            "detect-prob: closed form {:.5}, quadrature {:.5}, relative difference {:.1e}",
            p.closed_form, p.quadrature, rel
        ),
        summary: vec![
            ("closed_form", p.closed_form),
            ("quadrature", p.quadrature),
            ("relative_difference", rel),
        ],
        datasets: vec![ds],
        warnings,
    })
}

fn table_rows(cfg: &RunConfig, s: &Scenario) -> Result<Vec<systematics::TalbotRow>, CliError> {
    let period = match cfg.optional_length("table.period") {
        Some(d) => d,
        None => s.period().map_err(in_section("mask.reflection"))?,
    };
    talbot_table(&cfg.number_list("table.masses"), period).map_err(in_section("table.masses"))
}

pub fn table(cfg: &RunConfig) -> Result<Run, CliError> {
    let s = cfg.scenario()?;
    let rows = table_rows(cfg, &s)?;
    let ds = Dataset::table(
        "table",
        vec![
            Column::new("mass_amu", "amu"),
            Column::new("talbot_time_s", "s"),
            Column::new("free_fall_m", "m"),
        ],
        rows.iter().map(|r| vec![r.mass / AMU, r.talbot_time, r.free_fall]).collect(),
    );
    Ok(Run {
        line: format!(
            "table: {} masses, {}",
            rows.len(),
            rows.iter()
                .map(|r| format!("{:.0e} amu -> {:.2e} s / {:.2e} m", r.mass / AMU, r.talbot_time, r.free_fall))
                .collect::<Vec<_>>()
                .join("; ")
        ),
        summary: vec![("rows", rows.len() as f64)],
        datasets: vec![ds],
        warnings: Vec::new(),
    })
}

pub fn systematics(cfg: &RunConfig) -> Result<Run, CliError> {
    let Setup { scenario: s, talbot_time } = setup(cfg)?;
    let time = cfg.time("systematics.time", talbot_time);
    let report = SystematicsReport {
        deflection_angle: systematics::charge_deflection_angle(s.beam_energy, cfg.si("systematics.impact_parameter")?)
            .map_err(in_section("systematics.impact_parameter"))?,
        mirror_shift: systematics::mirror_charge_shift(cfg.si("systematics.cavity_radius")?, time, s.mass)
            .map_err(in_section("systematics.cavity_radius"))?,
        backscatter_velocity: systematics::backscatter_recoil(s.beam_energy, s.mass).map_err(in_section("beam.energy"))?,
        talbot_rows: table_rows(cfg, &s)?,
    };
    let ds = Dataset::table(
        "systematics",
        vec![
            Column::new("deflection_angle_rad", "rad"),
            Column::new("mirror_shift_m", "m"),
            Column::new("backscatter_velocity_m_per_s", "m/s"),
        ],
        vec![vec![report.deflection_angle, report.mirror_shift, report.backscatter_velocity]],
    )
    .note(format!("mirror-charge shift after {} s", fmt_number(time)));
    Ok(Run {
        line: format!(
            "systematics: deflection {:.2e} rad, mirror-charge shift {:.2} pm, backscatter recoil {:.3} mm/s",
            report.deflection_angle,
            report.mirror_shift / PM,
            report.backscatter_velocity * 1e3
        ),
        summary: vec![
            ("deflection_angle_rad", report.deflection_angle),
            ("mirror_shift_m", report.mirror_shift),
            ("backscatter_velocity_m_per_s", report.backscatter_velocity),
        ],
        datasets: vec![ds],
        warnings: Vec::new(),
    })
}
