//! Boundary kernels: the ball Poisson kernel, the quadrant segment kernels
//! and the half-space first-passage density.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{GreenError, Result};
use crate::geometry::{dist, dot, DomainSpec, BOUNDARY_TOL};

/// Normalization of the quadrant segment kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadrantMode {
    /// `N₁, N₂, N₃ = 0` as derived; each segment carries mass 1/(2π).
    Printed,
    /// Printed kernels scaled jointly so the total boundary mass is 1.
    Normalized,
}

impl fmt::Display for QuadrantMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Printed => "printed",
            Self::Normalized => "normalized",
        })
    }
}

impl FromStr for QuadrantMode {
    type Err = GreenError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "printed" => Ok(Self::Printed),
            "normalized" => Ok(Self::Normalized),
            _ => Err(GreenError::Parse {
                input: s.into(),
                reason: "expected printed or normalized".into(),
            }),
        }
    }
}

fn require_interior(domain: &DomainSpec, x: &[f64]) -> Result<()> {
    domain.check_point(x)?;
    if domain.clearance(x) <= BOUNDARY_TOL {
        return Err(GreenError::OutsideDomain(x.to_vec()));
    }
    Ok(())
}

fn require_boundary(domain: &DomainSpec, xb: &[f64]) -> Result<()> {
    if !domain.on_boundary(xb)? {
        return Err(GreenError::NotOnBoundary(xb.to_vec()));
    }
    Ok(())
}

/// `Γ(n/2)/(2π^{n/2}) · |R² − x²| / (R |x_B − x|ⁿ)` without argument checks.
pub fn ball_poisson_kernel(n: usize, radius: f64, x: &[f64], xb: &[f64]) -> f64 {
    let nf = n as f64;
    let c = gamma(nf / 2.0) / (2.0 * PI.powf(nf / 2.0));
    let num = (radius * radius - dot(x, x)).abs();
    c * num / (radius * dist(xb, x).powi(n as i32))
}

/// Printed quadrant segment kernels, optionally rescaled to unit total mass.
pub fn quadrant_boundary_kernel(x: &[f64], xb: &[f64], mode: QuadrantMode) -> Result<f64> {
    let q = DomainSpec::Quadrant;
    require_interior(&q, x)?;
    require_boundary(&q, xb)?;
    let (a, b) = (x[0], x[1]);
    let on_axis1 = xb[1].abs() <= BOUNDARY_TOL;
    let on_axis2 = xb[0].abs() <= BOUNDARY_TOL;
    let printed = match (on_axis1, on_axis2) {
        (true, true) => 0.0,
        (true, false) => {
            let n1 = b / (2.0 * ((a / b).atan() + FRAC_PI_2));
            n1 / (PI * ((xb[0] - a).powi(2) + b * b))
        }
        _ => {
            let n2 = a / (2.0 * ((b / a).atan() + FRAC_PI_2));
            n2 / (PI * (a * a + (xb[1] - b).powi(2)))
        }
    };
    Ok(match mode {
        QuadrantMode::Printed => printed,
        QuadrantMode::Normalized => PI * printed,
    })
}

/// Exact harmonic-measure density of the quadrant, from the odd extension
/// of the half-plane Poisson kernel.
pub fn quadrant_harmonic_density(x: &[f64], xb: &[f64]) -> Result<f64> {
    let q = DomainSpec::Quadrant;
    require_interior(&q, x)?;
    require_boundary(&q, xb)?;
    let density = |t: f64, a: f64, b: f64| {
        (b / ((t - a).powi(2) + b * b) - b / ((t + a).powi(2) + b * b)) / PI
    };
    Ok(if xb[1].abs() <= BOUNDARY_TOL {
        density(xb[0], x[0], x[1])
    } else {
        density(xb[1], x[1], x[0])
    })
}

/// Half-space Poisson kernel `Γ(n/2)/π^{n/2} · xⁿ / |x − x_B|ⁿ`.
pub fn half_space_poisson_kernel(x: &[f64], xb: &[f64]) -> f64 {
    let n = x.len();
    let nf = n as f64;
    gamma(nf / 2.0) / PI.powf(nf / 2.0) * x[n - 1] / dist(x, xb).powi(n as i32)
}

/// Elliptic boundary kernel: the Poisson kernel of the ball (interior or
/// exterior) or half-space, or the printed quadrant segment kernels.
pub fn boundary_kernel_elliptic(domain: &DomainSpec, x: &[f64], xb: &[f64]) -> Result<f64> {
    match *domain {
        DomainSpec::HalfSpace { .. } => {
            require_interior(domain, x)?;
            require_boundary(domain, xb)?;
            Ok(half_space_poisson_kernel(x, xb))
        }
        DomainSpec::Ball { dim, radius, .. } => {
            require_interior(domain, x)?;
            require_boundary(domain, xb)?;
            Ok(ball_poisson_kernel(dim, radius, x, xb))
        }
        DomainSpec::Quadrant => quadrant_boundary_kernel(x, xb, QuadrantMode::Printed),
        _ => Err(GreenError::Unsupported(format!(
            "no elliptic boundary kernel for {domain}"
        ))),
    }
}

/// Half-space parabolic boundary kernel `xⁿ Δt^{−(n/2+1)} e^{−π|x_B − x|²/Δt}`,
/// zero for `Δt ≤ 0`. As a function of Δt at fixed x it is the first-passage
/// density to the wall.
pub fn boundary_kernel_parabolic(
    domain: &DomainSpec,
    x: &[f64],
    dt: f64,
    xb: &[f64],
) -> Result<f64> {
    let DomainSpec::HalfSpace { dim } = *domain else {
        return Err(GreenError::Unsupported(format!(
            "no parabolic boundary kernel for {domain}"
        )));
    };
    domain.check_point(xb)?;
    if xb[dim - 1].abs() > BOUNDARY_TOL {
        return Err(GreenError::NotOnBoundary(xb.to_vec()));
    }
    require_interior(domain, x)?;
    if dt <= 0.0 {
        return Ok(0.0);
    }
    let r = dist(x, xb);
    Ok(x[dim - 1] * dt.powf(-(dim as f64) / 2.0 - 1.0) * (-PI * r * r / dt).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BallSide;
    use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};

    fn ball3() -> DomainSpec {
        DomainSpec::ball(3, 1.0, BallSide::Interior).unwrap()
    }

    #[test]
    fn poisson_examples() {
        let k = boundary_kernel_elliptic(&ball3(), &[0.0; 3], &[0.0, 0.6, 0.8]).unwrap();
        assert!((k - 1.0 / (4.0 * PI)).abs() < 1e-15);
        let k = boundary_kernel_elliptic(&ball3(), &[0.5, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        assert!((k - 3.0 / (2.0 * PI)).abs() < 1e-14);
        assert!(matches!(
            boundary_kernel_elliptic(&ball3(), &[0.5, 0.0, 0.0], &[0.5, 0.0, 0.0]),
            Err(GreenError::NotOnBoundary(_))
        ));
        assert!(matches!(
            boundary_kernel_elliptic(&ball3(), &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]),
            Err(GreenError::OutsideDomain(_))
        ));
    }

    #[test]
    fn disk_poisson_mass() {
        let disk = DomainSpec::ball(2, 1.5, BallSide::Interior).unwrap();
        let x = [0.4, -0.7];
        let r = integrate(
            |t| boundary_kernel_elliptic(&disk, &x, &[1.5 * t.cos(), 1.5 * t.sin()]).unwrap() * 1.5,
            0.0,
            2.0 * PI,
            Tolerance::new(1e-13, 1e-13),
        );
        assert!((r.value - 1.0).abs() < 1e-11);
    }

    #[test]
    fn quadrant_segment_masses() {
        let x = [1.0, 1.0];
        assert_eq!(
            quadrant_boundary_kernel(&x, &[0.0, 0.0], QuadrantMode::Printed).unwrap(),
            0.0
        );
        let tol = Tolerance::new(1e-13, 1e-13);
        for mode in [QuadrantMode::Printed, QuadrantMode::Normalized] {
            let m1 = integrate_to_infinity(
                |t| quadrant_boundary_kernel(&x, &[t, 0.0], mode).unwrap(),
                0.0,
                tol,
            );
            let m2 = integrate_to_infinity(
                |t| quadrant_boundary_kernel(&x, &[0.0, t], mode).unwrap(),
                0.0,
                tol,
            );
            let want = if mode == QuadrantMode::Printed {
                1.0 / (2.0 * PI)
            } else {
                0.5
            };
            assert!((m1.value - want).abs() < 1e-10);
            assert!((m2.value - want).abs() < 1e-10);
        }
        let h = integrate_to_infinity(
            |t| quadrant_harmonic_density(&[0.7, 1.9], &[t, 0.0]).unwrap(),
            0.0,
            tol,
        );
        let v = integrate_to_infinity(
            |t| quadrant_harmonic_density(&[0.7, 1.9], &[0.0, t]).unwrap(),
            0.0,
            tol,
        );
        assert!((h.value + v.value - 1.0).abs() < 1e-10);
        // Exit is more likely through the nearer wall.
        assert!(v.value > h.value);
    }

    #[test]
    fn parabolic_examples() {
        let hs = DomainSpec::half_space(1).unwrap();
        let k = boundary_kernel_parabolic(&hs, &[1.0], 1.0, &[0.0]).unwrap();
        assert!((k - (-PI).exp()).abs() < 1e-16);
        assert_eq!(
            boundary_kernel_parabolic(&hs, &[1.0], 0.0, &[0.0]).unwrap(),
            0.0
        );
        assert_eq!(
            boundary_kernel_parabolic(&hs, &[1.0], -2.0, &[0.0]).unwrap(),
            0.0
        );
        assert!(matches!(
            boundary_kernel_parabolic(&hs, &[1.0], 1.0, &[0.5]),
            Err(GreenError::NotOnBoundary(_))
        ));
        let total = integrate_to_infinity(
            |dt| boundary_kernel_parabolic(&hs, &[1.0], dt, &[0.0]).unwrap(),
            0.0,
            Tolerance::new(1e-12, 1e-12),
        );
        assert!((total.value - 1.0).abs() < 1e-9, "{total:?}");
    }

    #[test]
    fn half_plane_poisson_mass() {
        let hp = DomainSpec::half_space(2).unwrap();
        let x = [0.3, 0.25];
        let m = crate::quadrature::integrate_real_line(
            |t| boundary_kernel_elliptic(&hp, &x, &[t, 0.0]).unwrap(),
            0.3,
            Tolerance::new(1e-13, 1e-13),
        );
        assert!((m.value - 1.0).abs() < 1e-10, "{m:?}");
        assert_eq!(
            boundary_kernel_elliptic(&DomainSpec::half_space(1).unwrap(), &[2.0], &[0.0]).unwrap(),
            1.0
        );
    }
}
