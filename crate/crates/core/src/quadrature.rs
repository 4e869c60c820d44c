//! Globally adaptive Gauss–Kronrod (7/15) quadrature in one and two
//! dimensions.
//!
//! The 2D rule is a tensor product of two adaptive 1D rules: the outer
//! integrand is itself an adaptive inner integral.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// published 30-digit abscissae and weights
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn absolute(abs: f64) -> Self {
        Self {
            abs,
            rel: 0.0,
            max_intervals: 2000,
        }
    }

    pub const fn with_rel(self, rel: f64) -> Self {
        Self { rel, ..self }
    }

    pub const fn with_max_intervals(self, max_intervals: usize) -> Self {
        Self {
            max_intervals,
            ..self
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Interval {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Interval {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]`, bisecting the interval with the largest
/// error estimate until the total error meets the tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let first = kronrod(&f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    let mut evaluations = 15;
    let mut heap = BinaryHeap::from([first]);

    while error > tol.target(value) {
        if heap.len() >= tol.max_intervals {
            return Err(Error::Numerical {
                message: format!("adaptive quadrature on [{a:e}, {b:e}] hit the interval limit"),
                estimate: value,
                error,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // Running sums drift; resum once the estimate is close to converged.
        if error <= tol.target(value) {
            value = heap.iter().map(|i| i.value).sum();
            error = heap.iter().map(|i| i.error).sum();
        }
    }
    Ok(Estimate {
        value,
        error,
        evaluations,
    })
}

/// Integrates `f(x, y)` over the rectangle `[ax, bx] × [ay, by]`.
///
/// The inner integrals are solved to a tolerance tightened by the outer
/// interval length so their errors cannot dominate the outer estimate.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    (ax, bx): (f64, f64),
    (ay, by): (f64, f64),
    tol: Tolerance,
) -> Result<Estimate> {
    let inner_tol = Tolerance {
        abs: 0.1 * tol.abs / (bx - ax).abs().max(1.0),
        rel: 0.1 * tol.rel,
        max_intervals: tol.max_intervals,
    };
    let failure = std::cell::RefCell::new(None);
    let inner_error = std::cell::Cell::new(0.0f64);
    let inner_evals = std::cell::Cell::new(0usize);
    let outer = integrate(
        |x| match integrate(|y| f(x, y), ay, by, inner_tol) {
            Ok(e) => {
                inner_error.set(inner_error.get().max(e.error));
                inner_evals.set(inner_evals.get() + e.evaluations);
                e.value
            }
            Err(err) => {
                failure.borrow_mut().get_or_insert(err);
                0.0
            }
        },
        ax,
        bx,
        tol,
    )?;
    if let Some(err) = failure.into_inner() {
        return Err(err);
    }
    Ok(Estimate {
        value: outer.value,
        error: outer.error + inner_error.get() * (bx - ax).abs(),
        evaluations: inner_evals.get(),
    })
}

/// Fixed composite Gauss–Legendre rule with `panels` equal panels of the
/// 15-point Kronrod nodes. Used where an adaptive rule would make results
/// depend on evaluation history (radial profile integrals).
pub fn composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            kronrod(&f, lo, lo + h).value
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let e = integrate(|x| x.powi(7) - 3.0 * x * x, 0.0, 2.0, Tolerance::absolute(1e-14)).unwrap();
        assert!((e.value - (32.0 - 8.0)).abs() < 1e-12);
        assert_eq!(e.evaluations, 15);
    }

    #[test]
    fn gaussian_integral() {
        let e = integrate(|x| (-x * x / 2.0).exp(), 0.0, 12.0, Tolerance::absolute(1e-13)).unwrap();
        assert!((e.value - (PI / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_integrand() {
        let e = integrate(|x| (50.0 * x).sin(), 0.0, PI, Tolerance::absolute(1e-12)).unwrap();
        assert!(e.value.abs() < 1e-10, "{}", e.value);
    }

    #[test]
    fn interval_limit_is_reported() {
        let err = integrate(
            |x| 1.0 / x.sqrt(),
            0.0,
            1.0,
            Tolerance::absolute(1e-15).with_max_intervals(8),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Numerical { .. }));
    }

    #[test]
    fn separable_2d() {
        let e = integrate_2d(
            |x, y| x * x * (-y).exp(),
            (0.0, 3.0),
            (0.0, 40.0),
            Tolerance::absolute(1e-10),
        )
        .unwrap();
        assert!((e.value - 9.0).abs() < 1e-9, "{}", e.value);
    }

    #[test]
    fn composite_rule() {
        let v = composite(|x| x.cos(), 0.0, PI / 2.0, 4);
        assert!((v - 1.0).abs() < 1e-14);
    }
}
