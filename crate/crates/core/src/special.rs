//! Spherical Bessel function of order one.

/// Below this argument the closed form cancels catastrophically and the
/// Taylor series is used instead.
const SERIES_CUTOFF: f64 = 0.1;

/// First positive zero of j₁(x).
pub const J1_FIRST_ZERO: f64 = 4.493_409_457_909_064;

/// Spherical Bessel function j₁(x) = sin x / x² − cos x / x.
pub fn j1(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        x * j1_over_x_series(x * x)
    } else {
        let (s, c) = x.sin_cos();
        (s / x - c) / x
    }
}

/// j₁(x)/x, continuous at the origin where it tends to 1/3.
pub fn j1_over_x(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        j1_over_x_series(x * x)
    } else {
        let (s, c) = x.sin_cos();
        (s / x - c) / (x * x)
    }
}

// j₁(x)/x = Σ (−x²/2)^k / (k! (2k+3)!!); five terms reach 1e-19 at the cutoff.
fn j1_over_x_series(x2: f64) -> f64 {
    1.0 / 3.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 840.0 - x2 * (1.0 / 45_360.0 - x2 / 3_991_680.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_limits() {
        assert_eq!(j1(0.0), 0.0);
        assert!((j1_over_x(0.0) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn series_and_closed_form_meet_at_cutoff() {
        let below = j1_over_x(SERIES_CUTOFF * (1.0 - 1e-13));
        let above = j1_over_x(SERIES_CUTOFF * (1.0 + 1e-13));
        assert!((below - above).abs() < 1e-14, "{below} vs {above}");
    }

    #[test]
    fn known_values() {
        // j1(1) = sin 1 − cos 1
        assert!((j1(1.0) - (1f64.sin() - 1f64.cos())).abs() < 1e-15);
        assert!((j1(2.5) - 0.416_212_989_275_406_6).abs() < 1e-14);
    }

    #[test]
    fn first_zero_by_bisection() {
        let (mut lo, mut hi) = (4.0, 5.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if j1(lo) * j1(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((0.5 * (lo + hi) - J1_FIRST_ZERO).abs() < 1e-12);
        assert!(j1(J1_FIRST_ZERO).abs() < 1e-14);
    }

    #[test]
    fn odd_symmetry() {
        for x in [0.0005, 0.3, 2.0, 17.0] {
            assert_eq!(j1(-x), -j1(x));
            assert_eq!(j1_over_x(-x), j1_over_x(x));
        }
    }
}
