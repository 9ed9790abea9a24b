use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use super::{EnergyParam, KernelCase};
use crate::error::{GreenError, Result};
use crate::quadrature::{integrate_breaks, Tolerance};

/// `π^{1−n/2} Γ(n/2 − 1)`, the coefficient of `r^{2−n}` (n ≥ 3).
pub fn free_elliptic_constant(n: usize) -> f64 {
    let nf = n as f64;
    PI.powf(1.0 - nf / 2.0) * gamma(nf / 2.0 - 1.0)
}

/// Free-space elliptic kernel: `π^{1−n/2} Γ(n/2−1) r^{2−n}`, or `−2 ln r`
/// in the plane.
pub fn free_elliptic(n: usize, r: f64) -> Result<f64> {
    if n < 2 {
        return Err(GreenError::InvalidParameter(format!(
            "free elliptic kernel needs n ≥ 2, got {n}"
        )));
    }
    if r == 0.0 {
        return Err(GreenError::Singular("free elliptic kernel at r = 0".into()));
    }
    if !(r > 0.0) {
        return Err(GreenError::InvalidParameter(format!(
            "distance must be positive, got {r}"
        )));
    }
    Ok(match n {
        2 => -2.0 * r.ln(),
        3 => 1.0 / r,
        _ => free_elliptic_constant(n) * r.powf(2.0 - n as f64),
    })
}

/// Real heat kernel, zero for non-positive elapsed time.
#[inline]
pub fn free_heat_real(n: usize, r2: f64, dt: f64) -> f64 {
    if dt <= 0.0 {
        return 0.0;
    }
    let pre = match n {
        1 => dt.sqrt().recip(),
        2 => dt.recip(),
        3 => (dt * dt * dt).sqrt().recip(),
        _ => dt.powf(-(n as f64) / 2.0),
    };
    pre * (-PI * r2 / dt).exp()
}

/// Heat kernel `Δt^{−n/2} e^{−πr²/Δt}` for `s = 1`, Schrödinger kernel
/// `(iΔt)^{−n/2} e^{iπr²/Δt}` (principal branch) for `s = i`.
pub fn free_heat(n: usize, r: f64, dt: f64, case: KernelCase) -> Result<Complex64> {
    if n == 0 {
        return Err(GreenError::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    if !(r >= 0.0) || !dt.is_finite() {
        return Err(GreenError::InvalidParameter(format!(
            "bad arguments r = {r}, dt = {dt}"
        )));
    }
    match case {
        KernelCase::Real => {
            if dt == 0.0 && r == 0.0 {
                return Err(GreenError::Singular(
                    "heat kernel at zero elapsed time and distance".into(),
                ));
            }
            Ok(Complex64::new(free_heat_real(n, r * r, dt), 0.0))
        }
        KernelCase::Imaginary => {
            if dt == 0.0 {
                return Err(GreenError::Singular(
                    "Schrödinger kernel at zero elapsed time".into(),
                ));
            }
            let nf = n as f64;
            // arg(iΔt) = ±π/2, so (iΔt)^{−n/2} = |Δt|^{−n/2} e^{∓iπn/4}.
            let branch = if dt > 0.0 {
                -PI * nf / 4.0
            } else {
                PI * nf / 4.0
            };
            let modulus = dt.abs().powf(-nf / 2.0);
            let phase = branch + PI * r * r / dt;
            Ok(Complex64::from_polar(modulus, phase))
        }
    }
}

/// `K_{m+1/2}(z)` by the terminating series.
fn bessel_k_half_integer(m: usize, z: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 0..=m {
        if k > 0 {
            // (m+k)!/(k!(m−k)!) / (2z)^k from the previous term.
            term *= ((m + k) * (m + 1 - k)) as f64 / (k as f64 * 2.0 * z);
        }
        sum += term;
    }
    (PI / (2.0 * z)).sqrt() * (-z).exp() * sum
}

/// Fixed-energy kernel `∫₀^∞ τ^{−n/2} exp(−2πℰτ − πr²/τ) dτ`.
///
/// Odd dimensions use the half-integer Bessel closed form; even dimensions
/// integrate in `log τ`.
pub fn fixed_energy(n: usize, r: f64, energy: EnergyParam) -> Result<f64> {
    let e = energy.value();
    if n == 0 {
        return Err(GreenError::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    if r == 0.0 {
        return Err(GreenError::Singular("fixed-energy kernel at r = 0".into()));
    }
    if !(r > 0.0) {
        return Err(GreenError::InvalidParameter(format!(
            "distance must be positive, got {r}"
        )));
    }
    if e == 0.0 {
        if n <= 2 {
            return Err(GreenError::Divergent(format!(
                "fixed-energy kernel with ℰ = 0 in n = {n}"
            )));
        }
        return free_elliptic(n, r);
    }
    let a = 2.0 * PI * e;
    let b = PI * r * r;
    let nu = 1.0 - n as f64 / 2.0;
    if n % 2 == 1 {
        let z = 2.0 * (a * b).sqrt();
        if n == 3 {
            return Ok((-z).exp() / r);
        }
        // K_ν = K_{−ν}; |ν| = m + 1/2.
        let m = (nu.abs() - 0.5).round() as usize;
        return Ok(2.0 * (b / a).powf(nu / 2.0) * bessel_k_half_integer(m, z));
    }
    let nf = n as f64;
    let mut g = |s: f64| {
        let tau = s.exp();
        (-(a * tau) - b / tau + (1.0 - nf / 2.0) * s).exp()
    };
    // Outside this window one of the exponents underflows.
    let s_lo = (b / 745.0).ln();
    let s_hi = (745.0 / a).ln();
    let pts: Vec<f64> = (0..=16)
        .map(|i| s_lo + (s_hi - s_lo) * i as f64 / 16.0)
        .collect();
    integrate_breaks(&mut g, &pts, Tolerance::new(0.0, 1e-13)).ok_within(1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_to_infinity;

    #[test]
    fn elliptic_examples() {
        assert!((free_elliptic(3, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(free_elliptic(2, 1.0).unwrap(), 0.0);
        assert!((free_elliptic(4, 2.0).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!(matches!(
            free_elliptic(3, 0.0),
            Err(GreenError::Singular(_))
        ));
    }

    #[test]
    fn heat_examples() {
        let v = free_heat(2, 0.0, 1.0, KernelCase::Real).unwrap();
        assert_eq!(v, Complex64::new(1.0, 0.0));
        let v = free_heat(1, 1.0, 1.0, KernelCase::Real).unwrap();
        assert!((v.re - (-PI).exp()).abs() < 1e-16);
        assert_eq!(free_heat(1, 1.0, -1.0, KernelCase::Real).unwrap().re, 0.0);
        assert!(matches!(
            free_heat(3, 0.0, 0.0, KernelCase::Real),
            Err(GreenError::Singular(_))
        ));
    }

    #[test]
    fn schrodinger_modulus_and_conjugation() {
        for n in 1..=5 {
            for (r, dt) in [(0.0, 0.7), (1.3, 2.0), (0.4, 0.1)] {
                let f = free_heat(n, r, dt, KernelCase::Imaginary).unwrap();
                let b = free_heat(n, r, -dt, KernelCase::Imaginary).unwrap();
                assert!((f.norm() - dt.powf(-(n as f64) / 2.0)).abs() < 1e-12 * f.norm());
                assert!((f - b.conj()).norm() < 1e-12 * f.norm());
            }
        }
        // Principal branch: n = 2, r = 0, Δt = 1 gives i^{−1} = −i.
        let v = free_heat(2, 0.0, 1.0, KernelCase::Imaginary).unwrap();
        assert!((v - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }

    fn tau_quadrature(n: usize, r: f64, e: f64) -> f64 {
        let nf = n as f64;
        integrate_to_infinity(
            |t| {
                if t == 0.0 {
                    0.0
                } else {
                    t.powf(-nf / 2.0) * (-2.0 * PI * e * t - PI * r * r / t).exp()
                }
            },
            0.0,
            Tolerance::new(1e-15, 1e-13),
        )
        .value
    }

    #[test]
    fn fixed_energy_closed_forms_match_quadrature() {
        for n in [1, 3, 5, 7] {
            for r in [0.5, 1.0, 2.0] {
                for e in [0.1, 1.0] {
                    let got = fixed_energy(n, r, EnergyParam::new(e).unwrap()).unwrap();
                    let want = tau_quadrature(n, r, e);
                    assert!(
                        (got - want).abs() <= 1e-9 * want.abs().max(1e-300),
                        "n={n} r={r} e={e}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn fixed_energy_even_dimensions() {
        for n in [2, 4] {
            let got = fixed_energy(n, 0.8, EnergyParam::new(0.3).unwrap()).unwrap();
            let want = tau_quadrature(n, 0.8, 0.3);
            assert!((got - want).abs() < 1e-10 * want);
        }
        let z = fixed_energy(3, 1.0, EnergyParam::new(0.0).unwrap()).unwrap();
        assert!((z - 1.0).abs() < 1e-15);
        assert!(matches!(
            fixed_energy(2, 1.0, EnergyParam::new(0.0).unwrap()),
            Err(GreenError::Divergent(_))
        ));
        assert!(fixed_energy(3, 1e3, EnergyParam::new(1.0).unwrap()).unwrap() < 1e-300);
    }
}
