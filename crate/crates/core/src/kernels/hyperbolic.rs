//! Mollified wave kernel `I(u; n)` in the invariant interval `u = (Δy)²`.
//!
//! For even `n ≥ 4`, `I = c_n δ^{(n/2−2)}(u)` with `|c_n| = 2^{n/2−1}(2π)^{2−n/2}`
//! (so `I = 2δ(u)` in four dimensions); in the plane `I = π sign(u)`. The
//! distribution is replaced by its convolution with a centred Gaussian of
//! standard deviation `w`. The overall phase `(−1)^{n/2−1}` is dropped and the
//! modulus reported.

use std::f64::consts::PI;

use statrs::function::erf::erf;

use super::MollifierWidth;
use crate::error::{GreenError, Result};

/// Probabilists' Hermite polynomial `He_m(x)`.
fn hermite_he(m: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, x);
    if m == 0 {
        return h0;
    }
    for k in 1..m {
        let h2 = x * h1 - k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Mollified `I(u; n)` for even `n`.
pub fn hyperbolic_i(n: usize, u: f64, w: MollifierWidth) -> Result<f64> {
    let w = w.value();
    if n % 2 == 1 || n == 0 {
        return Err(GreenError::Unsupported(format!(
            "the wave kernel is available in even dimensions only, got n = {n}"
        )));
    }
    if !u.is_finite() {
        return Err(GreenError::InvalidParameter(format!(
            "interval must be finite, got {u}"
        )));
    }
    if n == 2 {
        return Ok(PI * erf(u / (std::f64::consts::SQRT_2 * w)));
    }
    let m = n / 2 - 2;
    let z = u / w;
    let eta = (-0.5 * z * z).exp() / (w * (2.0 * PI).sqrt());
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let deriv = sign * hermite_he(m, z) * eta / w.powi(m as i32);
    let c = 2f64.powi(n as i32 / 2 - 1) * (2.0 * PI).powi(2 - n as i32 / 2);
    Ok(c * deriv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_real_line, Tolerance};

    fn w(x: f64) -> MollifierWidth {
        MollifierWidth::new(x).unwrap()
    }

    #[test]
    fn concentrated_support() {
        assert!(hyperbolic_i(4, 5.0, w(0.01)).unwrap().abs() < 1e-100);
        assert!(matches!(
            hyperbolic_i(3, 0.0, w(0.1)),
            Err(GreenError::Unsupported(_))
        ));
        assert!(MollifierWidth::new(0.0).is_err());
    }

    #[test]
    fn four_dimensional_pairing() {
        let pair = |width: f64| {
            integrate_real_line(
                |u| hyperbolic_i(4, u, w(width)).unwrap() * (-u * u).exp(),
                0.0,
                Tolerance::new(1e-14, 1e-13),
            )
            .value
        };
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&x| (pair(x) - 2.0).abs())
            .collect();
        for k in 0..2 {
            let ratio = errs[k] / errs[k + 1];
            assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
        }
    }

    #[test]
    fn higher_dimension_is_derivative_of_delta() {
        // n = 6: |c| δ'(u), so pairing with h gives −|c| h'(0).
        let c = 4.0 / (2.0 * PI);
        let h = |u: f64| (-(u - 0.3).powi(2)).exp();
        let dh0 = 0.6 * (-0.09f64).exp();
        let v = integrate_real_line(
            |u| hyperbolic_i(6, u, w(0.002)).unwrap() * h(u),
            0.0,
            Tolerance::new(1e-12, 1e-12),
        )
        .value;
        assert!((v + c * dh0).abs() < 1e-4, "{v} vs {}", -c * dh0);
    }

    #[test]
    fn plane_is_mollified_sign() {
        assert!((hyperbolic_i(2, 10.0, w(0.1)).unwrap() - PI).abs() < 1e-15);
        assert!((hyperbolic_i(2, -10.0, w(0.1)).unwrap() + PI).abs() < 1e-15);
        assert_eq!(hyperbolic_i(2, 0.0, w(0.1)).unwrap(), 0.0);
    }
}
