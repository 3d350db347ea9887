//! Standard normal tail `Q(x) = P[Z > x]` and its inverse.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Upper-tail probability of the standard normal.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Lower-tail probability `Φ(x) = Q(-x)`.
fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `Q⁻¹(p)` for `p ∈ (0, 1)`.
///
/// Rational approximation of the normal quantile (relative error about
/// 1.2e-9) followed by one Halley correction against `erfc`. The branch is
/// taken on `min(p, 1-p)`, which is exact for `p ≥ 1/2`, so both tails keep
/// full accuracy.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ArgumentOutOfRange(p));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p < 0.5 {
        Ok(-lower_quantile(p))
    } else {
        Ok(lower_quantile(1.0 - p))
    }
}

// Acklam's published coefficients, kept verbatim.
#[allow(clippy::excessive_precision)]
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00, 3.754408661907416e+00];
const P_LOW: f64 = 0.02425;

/// `Φ⁻¹(p)` for `p ∈ (0, 1/2]`.
fn lower_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p <= 0.5);
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    let e = phi(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetry_point() {
        assert_eq!(q_function(0.0), 0.5);
        assert_eq!(q_inverse(0.5).unwrap(), 0.0);
    }

    #[test]
    fn tail_at_one() {
        assert!((q_inverse(0.1586553).unwrap() - 1.0).abs() < 1e-6);
        assert!((q_function(1.0) - 0.15865525393145707).abs() < 1e-15);
    }

    #[test]
    fn reference_quantiles() {
        // standard normal table values
        let table = [
            (0.1, 1.2815515655446004),
            (0.05, 1.6448536269514722),
            (0.025, 1.959963984540054),
            (0.01, 2.3263478740408408),
            (1e-9, 5.997807015007686),
        ];
        for (p, x) in table {
            assert!((q_inverse(p).unwrap() - x).abs() < 1e-12, "p = {p}");
            // 1 - p is rounded; compare against the quantile of its exact complement
            let upper = 1.0 - p;
            assert!((q_inverse(upper).unwrap() + q_inverse(1.0 - upper).unwrap()).abs() < 1e-15);
        }
        for (p, x) in [(0.9, -1.2815515655446004), (0.95, -1.6448536269514722)] {
            assert!((q_inverse(p).unwrap() - x).abs() < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn round_trips() {
        for p in [0.01, 0.05, 0.1, 0.5, 0.9] {
            assert!((q_function(q_inverse(p).unwrap()) - p).abs() < 1e-9);
        }
        // below x = -5, Q(x) sits within a few ulps of 1 and the inverse is
        // limited by the rounding of Q itself
        for i in -50..=70 {
            let x = i as f64 / 10.0;
            let p = q_function(x);
            assert!((q_inverse(p).unwrap() - x).abs() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn agrees_with_bisection_to_1e10() {
        // invert Q by bisection on a log grid of p
        let bisect = |p: f64| {
            let (mut lo, mut hi) = (-10.0f64, 10.0f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if q_function(mid) > p {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        for k in 0..=120 {
            let p = 10f64.powf(-12.0 + 12.0 * k as f64 / 120.0) * 0.5;
            if p < 1e-12 {
                continue;
            }
            let got = q_inverse(p).unwrap();
            assert!((got - bisect(p)).abs() < 1e-10, "p = {p}: {got} vs {}", bisect(p));
            // upper half: the oracle inverts the exact complement, Q(-x) = 1 - Q(x)
            let upper = 1.0 - p;
            let got = q_inverse(upper).unwrap();
            let want = -bisect(1.0 - upper);
            assert!((got - want).abs() < 1e-10, "p = {upper}: {got} vs {want}");
        }
    }

    #[test]
    fn rejects_out_of_range() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(q_inverse(p), Err(Error::ArgumentOutOfRange(_))));
        }
    }
}
