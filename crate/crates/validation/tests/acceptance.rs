//! Exit criteria for the simulator, one test and one PASS/FAIL line each.
//! Every tolerance is pinned here.

use std::f64::consts::PI;
use std::path::Path;

use endiff_cli::commands;
use endiff_cli::RunConfig;
use endiff_core::constants::{units::NM, units::PM, HBAR};
use endiff_core::grating::{aligned_coefficients, detection_probability, misaligned_coefficients, wentzel_amplitudes};
use endiff_core::interference::{default_grid, propagated_widths, uniform_grid};
use endiff_core::macroscopicity::spheroid_integral_with;
use endiff_core::quadrature::{integrate_2d, Tolerance};
use endiff_core::{
    Alignment, BeamSpec, CrystalSpec, EvolutionParams, FringeModel, GaussianState, Kernel, MaskSpec, MillerIndex,
    MisalignmentMode, PatternModel, Scenario,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use endiff_validation::{rel, report};


fn case_study_at(t_over_tm: f64) -> (Scenario, FringeModel) {
    let mut s = Scenario::case_study();
    s.t = t_over_tm * s.talbot_time().unwrap();
    let m = s.fringe_model().unwrap();
    (s, m)
}

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn run_cli(args: &[&str], out: &Path) -> i32 {
    let mut argv = vec!["endiff"];
    argv.extend_from_slice(args);
    let out = out.to_str().unwrap();
    argv.extend_from_slice(&["--out", out]);
    let (mut stdout, mut stderr) = (Vec::new(), Vec::new());
    endiff_cli::run(argv, &mut stdout, &mut stderr)
}

#[test]
fn criterion_01_talbot_table() {
    const EXPECTED_ROWS: [(f64, f64, f64); 5] = [
        (1e6, 9.2e-8, 1.7e-13),
        (2e9, 1.8e-4, 6.7e-7),
        (2e10, 1.8e-3, 6.7e-5),
        (1e11, 9.2e-3, 1.7e-3),
        (7e11, 6.5e-2, 8.2e-2),
    ];
    let dir = tempfile::tempdir().unwrap();
    let code = run_cli(&["table", "--config", "case_study"], dir.path());
    let rows = data_rows(&std::fs::read_to_string(dir.path().join("table.csv")).unwrap());
    let worst = EXPECTED_ROWS
        .iter()
        .zip(&rows)
        .map(|(p, r)| {
            assert_eq!(p.0, r[0]);
            rel(r[1], p.1).max(rel(r[2], p.2))
        })
        .fold(0.0f64, f64::max);
    let pass = code == 0 && rows.len() == 5 && worst <= 0.05;
    assert!(report(1, "Talbot table", pass, &format!("{} rows, worst deviation {:.2}% (limit 5%)", rows.len(), 100.0 * worst)));
}

#[test]
fn criterion_02_source_state() {
    let sx = Scenario::case_study().state().unwrap().sigma_x();
    let pass = (sx / PM - 3.8).abs() <= 0.2;
    assert!(report(2, "source position width", pass, &format!("sigma_X = {:.3} pm (3.8 +- 0.2)", sx / PM)));
}

fn j1_over_x(s: f64) -> f64 {
    if s < 1e-2 {
        let s2 = s * s;
        1.0 / 3.0 - s2 / 30.0 + s2 * s2 / 840.0
    } else {
        (s.sin() - s * s.cos()) / (s * s * s)
    }
}

/// I(α, β) sampled with ξ⊥ Rayleigh and ξ_z half-normal.
fn monte_carlo(alpha: f64, beta: f64, kernel: Kernel, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let [a, b, c]: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let xp2 = a * a + b * b;
        let g = j1_over_x((alpha * alpha * xp2 + beta * beta * c * c).sqrt());
        let v = xp2 * if kernel == Kernel::Squared { g * g } else { g };
        sum += v;
        sum_sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let se = ((sum_sq / n - mean * mean) / (n - 1.0)).sqrt();
    let scale = (PI / 2.0).sqrt();
    (scale * mean, scale * se)
}

#[test]
fn criterion_03_macroscopicity() {
    let run = commands::macroscopicity(&RunConfig::case_study()).unwrap();
    let value = |k: &str| run.summary.iter().find(|(n, _)| *n == k).unwrap().1;
    let mu = value("mu");
    let interior = value("boundary_maximum") == 0.0;
    let origin = spheroid_integral_with(0.0, 0.0, Kernel::Linear).unwrap().value;

    let mut mc_ok = true;
    let mut worst_sigma = 0.0f64;
    for (i, &(alpha, beta)) in [(1.09, 0.3), (10.9, 3.0), (109.0, 30.0)].iter().enumerate() {
        for kernel in [Kernel::Linear, Kernel::Squared] {
            let quad = spheroid_integral_with(alpha, beta, kernel).unwrap();
            let (mc, se) = monte_carlo(alpha, beta, kernel, 2_000_000, 101 + i as u64);
            worst_sigma = worst_sigma.max((quad.value - mc).abs() / se);
            mc_ok &= (quad.value - mc).abs() <= 3.0 * se + quad.error;
        }
    }
    let pass = (mu - 16.3).abs() <= 0.3 && interior && (origin - 0.8356).abs() <= 1e-3 && mc_ok;
    assert!(report(
        3,
        "macroscopicity",
        pass,
        &format!(
            "mu = {mu:.3} (16.3 +- 0.3, interior maximum: {interior}), I(0,0) = {origin:.5} (0.8356 +- 0.001), \
             Monte Carlo worst {worst_sigma:.2} sigma (limit 3)"
        )
    ));
}

#[test]
fn criterion_04_single_pair_classicality() {
    let d = Scenario::case_study().period().unwrap();
    let state = Scenario::case_study().state().unwrap();
    let tm = state.mass() * d * d / endiff_core::constants::PLANCK_H;
    let mut worst = 0.0f64;
    let mut full_worst = 0.0f64;
    for big_n in 1..=3 {
        let orders = [-big_n, big_n];
        let mask = MaskSpec::new(d, &orders, 1e-3).unwrap();
        for (amp, x) in [(1.0, 0.0), (0.37, 0.31 * d), (2.5, 0.77 * d)] {
            let amps = [(-big_n, Complex64::new(amp, 0.2)), (big_n, Complex64::new(1.0, -0.4))].into_iter().collect();
            let b = aligned_coefficients(&mask, &amps, (x, 0.0)).unwrap();
            for frac in [0.3, 1.0, 3.0] {
                let p = EvolutionParams::new(tm, frac * tm, state, d).unwrap();
                let m = FringeModel::new(&b, &p).unwrap();
                let grid = default_grid(m.widths());
                worst = worst.max(m.pattern(&grid, PatternModel::BroadEnvelope).unwrap().quantum_classical_distance());
                full_worst = full_worst.max(m.pattern(&grid, PatternModel::Full).unwrap().quantum_classical_distance());
            }
        }
    }
    let pass = worst < 1e-10;
    assert!(report(
        4,
        "single-pair classicality",
        pass,
        &format!("max L1 = {worst:.2e} broad-envelope (limit 1e-10); full model with envelope shifts {full_worst:.2e}")
    ));
}

/// Largest full-model L1 of any single ±N pair of the case-study mask at T_M.
fn single_pair_floor() -> f64 {
    let s = Scenario::case_study();
    let amps = s.amplitudes().unwrap();
    let params = {
        let mut s = s.clone();
        s.t = s.talbot_time().unwrap();
        s.evolution().unwrap()
    };
    [1, 2]
        .iter()
        .map(|&n| {
            let mask = MaskSpec::new(s.period().unwrap(), &[-n, n], s.pinhole_width).unwrap();
            let pair = [(-n, amps[&-n]), (n, amps[&n])].into_iter().collect();
            let b = aligned_coefficients(&mask, &pair, (0.0, 0.0)).unwrap();
            let m = FringeModel::new(&b, &params).unwrap();
            m.pattern(&default_grid(m.widths()), PatternModel::Full).unwrap().quantum_classical_distance()
        })
        .fold(0.0, f64::max)
}

#[test]
fn criterion_05_quantum_classical_separation() {
    const FROZEN_L1_AT_TALBOT: f64 = 0.6114;
    let (_, m) = case_study_at(1.0);
    let at_tm = m.pattern(&default_grid(m.widths()), PatternModel::Full).unwrap().quantum_classical_distance();
    let floor = single_pair_floor();

    let mut cfg = RunConfig::case_study();
    cfg.set("carpet.rows=201").unwrap();
    let run = commands::carpet_run(&cfg).unwrap();
    let tm = Scenario::case_study().talbot_time().unwrap();
    let peak = run.summary.iter().find(|(k, _)| *k == "argmax_l1_t_s").unwrap().1 / tm;

    let separated = at_tm > 10.0 * floor && (at_tm - FROZEN_L1_AT_TALBOT).abs() < 1e-3;
    let peak_ok = (peak - 1.0).abs() <= 0.15;
    assert!(report(
        5,
        "quantum-classical separation",
        separated && peak_ok,
        &format!(
            "L1(T_M) = {at_tm:.4} vs 10x floor {:.4} (frozen {FROZEN_L1_AT_TALBOT}); \
             distance peaks at t = {peak:.3} T_M (required within 0.85..1.15)",
            10.0 * floor
        )
    ));
}

#[test]
fn criterion_06_fringe_period_law() {
    let mut worst_fit = 0.0f64;
    let mut worst_geometric = 0.0f64;
    for frac in [0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0] {
        let (s, m) = case_study_at(frac);
        let pattern = m.pattern(&default_grid(m.widths()), PatternModel::Full).unwrap();
        let fitted = pattern.fringe_period().unwrap();
        worst_fit = worst_fit.max(rel(fitted, pattern.period_d));
        let d = s.period().unwrap();
        let geometric = d * (1.0 + s.t / s.pre_time().unwrap());
        worst_geometric = worst_geometric.max(rel(pattern.period_d, geometric));
    }
    let pass = worst_fit < 0.01 && worst_geometric < 0.01;
    assert!(report(
        6,
        "fringe-period law",
        pass,
        &format!(
            "fit vs closed form worst {:.3}%, closed form vs d(1+t/t0) worst {:.3}% (limit 1%)",
            100.0 * worst_fit,
            100.0 * worst_geometric
        )
    ));
}

/// ∫ρ̄²|ψ_in|² d²r over the disc, on a Cartesian quarter plane.
fn cartesian_norm(crystal: &CrystalSpec, beam: &BeamSpec) -> f64 {
    let r = crystal.radius();
    let k2 = beam.transverse_width().powi(2);
    let quarter = integrate_2d(
        |u, v| {
            let x = r * u.sin();
            let ymax = (r * r - x * x).max(0.0).sqrt();
            let y = ymax * v.sin();
            let rho = crystal.projected_density(x.hypot(y)).unwrap();
            rho * rho * (2.0 * k2 / PI) * (-2.0 * k2 * (x * x + y * y)).exp() * r * u.cos() * ymax * v.cos()
        },
        (0.0, PI / 2.0),
        (0.0, PI / 2.0),
        Tolerance::absolute(0.0).with_rel(1e-9),
    )
    .unwrap()
    .value;
    4.0 * quarter
}

#[test]
fn criterion_07_detection_probability_oracle() {
    let orders = [-2, -1, 1, 2];
    let mut worst = 0.0f64;
    for hwhm in [50.0, 115.0, 250.0] {
        for radius in [60.0, 109.0, 200.0] {
            let crystal = CrystalSpec::silicon(radius * NM, 30.0 * NM).unwrap();
            let beam = BeamSpec::from_spot_hwhm(300.0 * endiff_core::constants::units::KEV, hwhm * NM).unwrap();
            let d = crystal.d_spacing(MillerIndex::new(1, -1, 0)).unwrap();
            let mask = MaskSpec::new(d, &orders, 1e-3).unwrap();
            let amps = wentzel_amplitudes(&mask, MillerIndex::new(1, -1, 0), &crystal, &beam).unwrap();
            let p = detection_probability(&crystal, &beam, &mask, &amps).unwrap();
            worst = worst.max(rel(p.closed_form, cartesian_norm(&crystal, &beam) * p.amplitude_weight));
        }
    }
    let case = Scenario::case_study().detection_probability().unwrap().closed_form;
    assert!(report(
        7,
        "detection-probability oracle",
        worst < 0.01,
        &format!("3x3 grid worst {:.2e} relative (limit 1%); case study Pr_det = {case:.3}", worst)
    ));
}

#[test]
fn criterion_08_invariants() {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let d = Scenario::case_study().period().unwrap();
    let mut failures = Vec::new();

    let mut psd_worst = 0.0f64;
    let mut conj_worst = 0.0f64;
    for _ in 0..100 {
        let mut orders: Vec<i32> = (-4..=4).filter(|&n| n != 0 && rng.gen_bool(0.5)).collect();
        if orders.is_empty() {
            orders.push(1);
        }
        let mask = MaskSpec::new(d, &orders, 1e-3).unwrap();
        let amps = orders
            .iter()
            .map(|&n| (n, Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))))
            .collect();
        let y = rng.gen_range(-109.0..109.0) * NM;
        let mode = if rng.gen_bool(0.5) { MisalignmentMode::General } else { MisalignmentMode::SmallPinhole };
        for b in [
            aligned_coefficients(&mask, &amps, (0.0, y)).unwrap(),
            misaligned_coefficients(&mask, &amps, rng.gen_range(1e-4..1.0), mode, (0.0, y)).unwrap(),
        ] {
            let trace = b.trace();
            psd_worst = psd_worst.max(b.hermiticity_defect() / trace).max(-b.min_eigenvalue() / trace);
            for _ in 0..20 {
                let n = rng.gen_range(-8..=8);
                let xi = rng.gen_range(-3.0..3.0);
                let lhs = b.talbot_coefficient(n, xi);
                conj_worst = conj_worst.max((lhs - b.talbot_coefficient(-n, -xi).conj()).norm() / trace);
            }
        }
    }
    if psd_worst > 1e-12 {
        failures.push(format!("Hermitian/PSD defect {psd_worst:.1e}"));
    }
    if conj_worst > 1e-12 {
        failures.push(format!("conjugation defect {conj_worst:.1e}"));
    }

    let mut residue = 0.0f64;
    let mut negativity = 0.0f64;
    for alignment in [
        Alignment::Perfect,
        Alignment::Nutation { sigma_beta: 0.1, mode: MisalignmentMode::SmallPinhole },
        Alignment::Nutation { sigma_beta: 1e-3, mode: MisalignmentMode::General },
    ] {
        for frac in [0.0, 0.4, 1.0, 2.0] {
            let mut s = Scenario::case_study();
            s.alignment = alignment;
            s.electron_x = 17.0 * PM;
            s.electron_y = 54.5 * NM;
            s.t = frac * s.talbot_time().unwrap();
            let m = s.fringe_model().unwrap();
            for model in [PatternModel::Full, PatternModel::BroadEnvelope] {
                let p = m.pattern(&default_grid(m.widths()), model).unwrap();
                let max = p.quantum.iter().chain(&p.classical).fold(0.0f64, |a, v| a.max(*v));
                let min = p.quantum.iter().chain(&p.classical).fold(f64::INFINITY, |a, v| a.min(*v));
                residue = residue.max(p.imaginary_residue);
                negativity = negativity.max(-min / max);
            }
        }
    }
    if residue >= 1e-12 {
        failures.push(format!("imaginary residue {residue:.1e}"));
    }
    if negativity > 1e-12 {
        failures.push(format!("negative density {negativity:.1e}"));
    }

    let mut product_worst = 0.0f64;
    for _ in 0..200 {
        let mass = 10f64.powf(rng.gen_range(-22.0..-14.0));
        let sx = 10f64.powf(rng.gen_range(-13.0..-9.0));
        let sp = rng.gen_range(1.0..100.0) * HBAR / (2.0 * sx);
        let state = GaussianState::new(mass, sx, sp).unwrap();
        let p = EvolutionParams::new(rng.gen_range(1e-6..1e-2), rng.gen_range(0.0..1e-2), state, d).unwrap();
        let w = propagated_widths(&p);
        product_worst = product_worst.max(rel(w.sigma_x_tilde * w.sigma_p_tilde, sx * sp));
    }
    if product_worst > 1e-12 {
        failures.push(format!("width product defect {product_worst:.1e}"));
    }

    let (s, m) = case_study_at(1.0);
    let grid = uniform_grid(4.0 * m.widths().sigma_x_tilde, 512);
    let a = m.pattern(&grid, PatternModel::Full).unwrap();
    let mut shifted = s.clone();
    shifted.electron_x = d;
    let b = shifted.fringe_model().unwrap().pattern(&grid, PatternModel::Full).unwrap();
    let max = a.quantum.iter().fold(0.0f64, |m, v| m.max(*v));
    let shift_worst = a.quantum.iter().zip(&b.quantum).map(|(p, q)| (p - q).abs() / max).fold(0.0, f64::max);
    if shift_worst > 1e-12 {
        failures.push(format!("x -> x + d defect {shift_worst:.1e}"));
    }

    let orders = [-2, -1, 1, 2];
    let mask = MaskSpec::new(d, &orders, 1e-3).unwrap();
    let amps = s.amplitudes().unwrap();
    let y = 54.5 * NM;
    let aligned = aligned_coefficients(&mask, &amps, (0.0, y)).unwrap();
    let nearly = misaligned_coefficients(&mask, &amps, 1e-8, MisalignmentMode::General, (0.0, y)).unwrap();
    let limit_worst = orders
        .iter()
        .flat_map(|&n| orders.iter().map(move |&k| (n, k)))
        .map(|(n, k)| (nearly.get(n, k) - aligned.get(n, k)).norm() / aligned.get(n, k).norm())
        .fold(0.0, f64::max);
    if limit_worst >= 1e-6 {
        failures.push(format!("aligned limit defect {limit_worst:.1e}"));
    }

    let pass = failures.is_empty();
    let detail = if pass {
        format!(
            "PSD {psd_worst:.0e}, conjugation {conj_worst:.0e}, residue {residue:.0e}, negativity {negativity:.0e}, \
             width product {product_worst:.0e}, x+d {shift_worst:.0e}, aligned limit {limit_worst:.0e}"
        )
    } else {
        failures.join("; ")
    };
    assert!(report(8, "invariant suites", pass, &detail));
}

#[test]
fn criterion_09_misalignment() {
    let run = commands::misalign(&RunConfig::case_study()).unwrap();
    let dataset = &run.datasets[0];
    let fractions: Vec<f64> = dataset.rows.iter().map(|r| r[1]).collect();
    assert_eq!(fractions, [0.0, 0.25, 0.5, 1.0]);
    let aligned = dataset.rows[0][2];
    let misaligned: Vec<f64> = dataset.rows.iter().map(|r| r[3]).collect();
    let below = misaligned[2] < aligned;
    let monotone = misaligned.windows(2).all(|w| w[1] < w[0]);
    assert!(report(
        9,
        "misalignment",
        below && monotone,
        &format!(
            "aligned {aligned:.3}; y/R = 0, 1/4, 1/2, 1 -> {}",
            misaligned.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")
        )
    ));
}

#[test]
fn criterion_10_systematics() {
    let run = commands::systematics(&RunConfig::case_study()).unwrap();
    let value = |k: &str| run.summary.iter().find(|(n, _)| *n == k).unwrap().1;
    let angle = value("deflection_angle_rad");
    let shift = value("mirror_shift_m");
    let recoil = value("backscatter_velocity_m_per_s");
    let order = angle.log10().round() == -5.0;
    let pass = order && rel(angle, 5.9e-6) < 0.01 && rel(shift, 1e-12) <= 0.2 && rel(recoil, 2e-4) <= 0.1;
    assert!(report(
        10,
        "systematics",
        pass,
        &format!(
            "deflection {angle:.3e} rad (order 1e-5, 5.9e-6 +- 1%), mirror shift {:.3} pm (1 +- 20%), \
             recoil {:.4} mm/s (0.2 +- 10%)",
            shift / PM,
            recoil * 1e3
        )
    ));
}
