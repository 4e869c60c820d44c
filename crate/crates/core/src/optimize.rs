//! Bounded scalar maximisation.

/// Inverse golden ratio (√5 − 1)/2.
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
///
/// Stops when the bracket is narrower than `x_tol` or when the two interior
/// values agree to `f_rel_tol` relative; a non-positive `f_rel_tol` disables
/// the value test.
pub fn golden_section_max<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    x_tol: f64,
    f_rel_tol: f64,
) -> Maximum {
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evaluations = 2;

    while (b - a) > x_tol && (f_rel_tol <= 0.0 || (fc - fd).abs() > f_rel_tol * fc.abs().max(fd.abs())) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        evaluations += 1;
    }
    let (x, value) = if fc >= fd { (c, fc) } else { (d, fd) };
    Maximum {
        x,
        value,
        evaluations,
    }
}
