use std::f64::consts::PI;

use super::region::Region;
use super::Tracker;
use crate::covering::Representation;
use crate::error::{GreenError, Result};
use crate::field::{ScalarField, Support};
use crate::geometry::{DomainSpec, SpaceTimePoint, BOUNDARY_TOL};
use crate::kernels::{boundary_kernel_parabolic, free_heat_real, heat_domain_kernel};
use crate::problem::{BoundaryValueProblem, PdeClass};
use crate::quadrature::{integrate, integrate_to_infinity, QuadratureMethod, QuadratureSpec};

/// Heat kernels are below e^{−45} beyond this many `√(Δt/π)`.
const WINDOW: f64 = 45.0;

fn half_width(dt: f64) -> f64 {
    (WINDOW * dt / PI).sqrt()
}

/// `Ψ(x, t) = ∫₀ᵗ∫_U K_U f + ∫₀ᵗ∫_∂U K_∂ φ + ∫_U K_C ψ`.
///
/// The equation is `(1/4π)ΔΨ − ∂ₜΨ = −f`. Boundary data are supported on
/// the half-space; with Neumann representation `φ` is the outward normal
/// derivative and enters through `(1/4π)∫₀ᵗ∫ 2K_free φ`.
pub fn solve_parabolic(
    bvp: &BoundaryValueProblem,
    eval_at: &SpaceTimePoint,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if bvp.class != PdeClass::Parabolic {
        return Err(GreenError::InvalidParameter(format!(
            "expected a parabolic problem, got {}",
            bvp.class
        )));
    }
    bvp.validate()?;
    let t = eval_at.time;
    if !(t > 0.0) {
        return Err(GreenError::InvalidParameter(format!(
            "evaluation time must be positive, got {t}"
        )));
    }
    let domain = &bvp.domain;
    let x: &[f64] = &eval_at.space;
    domain.check_point(x)?;
    let clearance = domain.clearance(x);
    if clearance < -BOUNDARY_TOL {
        return Err(GreenError::OutsideDomain(x.to_vec()));
    }
    if clearance <= BOUNDARY_TOL {
        return match bvp.bc {
            Representation::Dirichlet => Ok(bvp.boundary.eval(x, t)),
            Representation::Neumann => Err(GreenError::OutsideDomain(x.to_vec())),
        };
    }
    let tracker = Tracker::new(quad);
    let abs = quad.target_tol / 3.0;
    let solver = Parabolic {
        bvp,
        x,
        method: quad.method,
        tracker: &tracker,
        kernel_tol: (abs * 1e-3).max(1e-15),
    };
    let zero = ScalarField::zero();
    let initial = bvp.initial.as_ref().unwrap_or(&zero);
    let cauchy = solver.spatial(initial, t, 0.0, abs)?;
    let source = solver.source(t, abs)?;
    let boundary = solver.boundary(t, abs)?;
    tracker.finish(cauchy + source + boundary)
}

struct Parabolic<'a> {
    bvp: &'a BoundaryValueProblem,
    x: &'a [f64],
    method: QuadratureMethod,
    tracker: &'a Tracker,
    kernel_tol: f64,
}

impl Parabolic<'_> {
    /// `∫_U K_U(x, y; dt) g(y, s) dy` over the window where the kernel is
    /// not negligible.
    fn spatial(&self, g: &ScalarField, dt: f64, s: f64, abs: f64) -> Result<f64> {
        if g.is_zero() {
            return Ok(0.0);
        }
        let domain = &self.bvp.domain;
        let Some(region) = Region::window(domain, g.support(), self.x, half_width(dt)) else {
            return Ok(0.0);
        };
        let bc = self.bvp.bc;
        let mut h = |y: &[f64]| {
            let v = g.eval(y, s);
            if v == 0.0 || domain.clearance(y) < 0.0 {
                return 0.0;
            }
            v * self.tracker.value(heat_domain_kernel(
                domain,
                bc,
                self.x,
                dt,
                y,
                self.kernel_tol,
            ))
        };
        Ok(region.integrate(&mut h, self.method, abs, self.tracker))
    }

    /// `∫₀ᵗ ds ∫_U K_U(x, y; t − s) f(y, s) dy`.
    fn source(&self, t: f64, abs: f64) -> Result<f64> {
        let f = &self.bvp.source;
        if f.is_zero() {
            return Ok(0.0);
        }
        if let (Some(c), DomainSpec::FreeSpace { .. }) = (f.constant_value(), self.bvp.domain) {
            return Ok(c * t);
        }
        let inner = 0.5 * abs / t;
        let r = integrate(
            |s| self.tracker.value(self.spatial(f, t - s, s, inner)),
            0.0,
            t,
            self.tracker.tol(abs),
        );
        Ok(self.tracker.take(r, abs))
    }

    /// Boundary term on the half-space, in `u = 1/Δt`.
    fn boundary(&self, t: f64, abs: f64) -> Result<f64> {
        let phi = &self.bvp.boundary;
        if phi.is_zero() {
            return Ok(0.0);
        }
        let domain = self.bvp.domain;
        let DomainSpec::HalfSpace { dim: n } = domain else {
            return Err(GreenError::Unsupported(format!(
                "parabolic boundary data on {domain}"
            )));
        };
        let x = self.x;
        let bc = self.bvp.bc;
        let tracker = self.tracker;
        let trace = wall_trace(phi.support(), n);
        let Some(trace) = trace else { return Ok(0.0) };
        // Kernel at Δt = 1/u, times the Jacobian 1/u².
        let kernel = |dt: f64, xb: &[f64]| -> f64 {
            match bc {
                Representation::Dirichlet => {
                    tracker.value(boundary_kernel_parabolic(&domain, x, dt, xb))
                }
                Representation::Neumann => {
                    let r2: f64 = x.iter().zip(xb).map(|(a, b)| (a - b).powi(2)).sum();
                    2.0 * free_heat_real(n, r2, dt) / (4.0 * PI)
                }
            }
        };
        let inner_abs = 0.5 * abs / (1.0 + t);
        let along_wall = |u: f64| -> f64 {
            let dt = 1.0 / u;
            let s = t - dt;
            let jac = dt * dt;
            if n == 1 {
                return jac * kernel(dt, &[0.0]) * phi.eval(&[0.0], s);
            }
            let foot = &x[..n - 1];
            let free = DomainSpec::FreeSpace { dim: n - 1 };
            let Some(region) = Region::window(&free, &trace, foot, half_width(dt)) else {
                return 0.0;
            };
            let mut g = |tb: &[f64]| {
                let mut xb = tb.to_vec();
                xb.push(0.0);
                let v = phi.eval(&xb, s);
                if v == 0.0 {
                    0.0
                } else {
                    kernel(dt, &xb) * v
                }
            };
            // Scale so the inner target is relative to the time density.
            jac * region.integrate(
                &mut g,
                QuadratureMethod::Adaptive1d,
                inner_abs / jac,
                tracker,
            )
        };
        let r = integrate_to_infinity(along_wall, 1.0 / t, tracker.tol(abs));
        Ok(tracker.take(r, abs))
    }
}

/// Support of boundary data on the wall `xⁿ = 0`, in the first `n − 1`
/// coordinates.
fn wall_trace(support: &Support, n: usize) -> Option<Support> {
    match support {
        Support::Everywhere => Some(Support::Everywhere),
        Support::Box { lo, hi } => (lo[n - 1] <= 0.0 && 0.0 <= hi[n - 1]).then(|| Support::Box {
            lo: lo[..n - 1].to_vec(),
            hi: hi[..n - 1].to_vec(),
        }),
        Support::Ball { center, radius } => {
            let h2 = radius * radius - center[n - 1] * center[n - 1];
            (h2 > 0.0).then(|| Support::Ball {
                center: center[..n - 1].to_vec(),
                radius: h2.sqrt(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use statrs::function::erf::{erf, erfc};

    fn st(x: &[f64], t: f64) -> SpaceTimePoint {
        SpaceTimePoint::new(Point::new(x.to_vec()).unwrap(), t).unwrap()
    }

    fn quad(tol: f64) -> QuadratureSpec {
        QuadratureSpec::new(QuadratureMethod::Adaptive1d, tol, 50_000_000).unwrap()
    }

    #[test]
    fn free_space_unit_mass() {
        for n in 1..=2 {
            let p = BoundaryValueProblem::parabolic(
                DomainSpec::free_space(n).unwrap(),
                Representation::Dirichlet,
                ScalarField::constant(1.0),
            );
            let v = solve_parabolic(&p, &st(&vec![0.3; n], 0.7), &quad(1e-9)).unwrap();
            assert!((v - 1.0).abs() < 1e-8, "n = {n}: {v}");
        }
    }

    #[test]
    fn erf_solution() {
        let p = BoundaryValueProblem::parabolic(
            DomainSpec::half_space(1).unwrap(),
            Representation::Dirichlet,
            ScalarField::zero(),
        )
        .with_boundary(ScalarField::constant(1.0));
        let v = solve_parabolic(&p, &st(&[1.0], 1.0), &quad(1e-9)).unwrap();
        let want = 1.0 - erf(PI.sqrt());
        assert!((v - want).abs() < 1e-8, "{v} vs {want}");
        // Same data on the half-plane reduces to the same profile.
        let p2 = BoundaryValueProblem::parabolic(
            DomainSpec::half_space(2).unwrap(),
            Representation::Dirichlet,
            ScalarField::zero(),
        )
        .with_boundary(ScalarField::constant(1.0));
        let v = solve_parabolic(&p2, &st(&[0.4, 1.0], 1.0), &quad(1e-8)).unwrap();
        assert!((v - want).abs() < 1e-7, "{v} vs {want}");
    }

    #[test]
    fn neumann_flux_on_half_line() {
        // Outward derivative c at the wall: Ψ(0⁺, t) = c√t/π, and in general
        // Ψ(x, t) = c[2√t e^{−πx²/t} − 2πx erfc(x√(π/t))]/(2π).
        let c = 0.8;
        let p = BoundaryValueProblem::parabolic(
            DomainSpec::half_space(1).unwrap(),
            Representation::Neumann,
            ScalarField::zero(),
        )
        .with_boundary(ScalarField::constant(c));
        let (x, t) = (0.3, 0.5f64);
        let want = c
            * (2.0 * t.sqrt() * (-PI * x * x / t).exp() - 2.0 * PI * x * erfc(x * (PI / t).sqrt()))
            / (2.0 * PI);
        let v = solve_parabolic(&p, &st(&[x], t), &quad(1e-10)).unwrap();
        assert!((v - want).abs() < 1e-9, "{v} vs {want}");
    }

    #[test]
    fn image_convolution_on_half_line() {
        // ψ a heat-kernel bump centred at 1: the Dirichlet solution is the
        // image difference of two Gaussians of variance (s + t)/(2π).
        let s0 = 0.05;
        let psi = ScalarField::spatial(
            move |y| free_heat_real(1, (y[0] - 1.0).powi(2), s0),
            Support::Everywhere,
        );
        let p = BoundaryValueProblem::parabolic(
            DomainSpec::half_space(1).unwrap(),
            Representation::Dirichlet,
            psi,
        );
        for (x, t) in [(0.5, 0.1), (1.2, 0.3), (0.05, 1.0)] {
            let want = free_heat_real(1, (x - 1.0) * (x - 1.0), s0 + t)
                - free_heat_real(1, (x + 1.0) * (x + 1.0), s0 + t);
            let v = solve_parabolic(&p, &st(&[x], t), &quad(1e-9)).unwrap();
            assert!((v - want).abs() < 1e-8, "({x}, {t}): {v} vs {want}");
        }
    }

    #[test]
    fn constant_source_in_a_strip() {
        // Interval [0,1], f ≡ 1, zero data: sine series with rates k²π/4.
        let p = BoundaryValueProblem::parabolic(
            DomainSpec::unit_strip(1).unwrap(),
            Representation::Dirichlet,
            ScalarField::zero(),
        )
        .with_source(ScalarField::constant(1.0));
        let (x, t) = (0.3, 2.0);
        let want: f64 = (1..20000)
            .step_by(2)
            .map(|k| {
                let kp = k as f64 * PI;
                let rate = kp * kp / (4.0 * PI);
                4.0 / kp * (1.0 - (-rate * t).exp()) / rate * (kp * x).sin()
            })
            .sum();
        let v = solve_parabolic(&p, &st(&[x], t), &quad(1e-8)).unwrap();
        assert!((v - want).abs() < 1e-7, "{v} vs {want}");
        // Early times: Ψ ≈ t away from the walls.
        let v = solve_parabolic(&p, &st(&[0.5], 1e-3), &quad(1e-10)).unwrap();
        assert!((v - 1e-3).abs() < 1e-9, "{v}");
    }

    #[test]
    fn initial_recovery() {
        let psi = ScalarField::parse("exp(-(x1 - 0.5)^2 * 20)", Support::Everywhere).unwrap();
        let p = BoundaryValueProblem::parabolic(
            DomainSpec::unit_strip(1).unwrap(),
            Representation::Dirichlet,
            psi.clone(),
        );
        let v = solve_parabolic(&p, &st(&[0.4], 1e-6), &quad(1e-10)).unwrap();
        let want = psi.eval(&[0.4], 0.0);
        assert!((v - want).abs() < 1e-3, "{v} vs {want}");
    }

    #[test]
    fn errors() {
        let p = BoundaryValueProblem::parabolic(
            DomainSpec::unit_strip(1).unwrap(),
            Representation::Dirichlet,
            ScalarField::zero(),
        )
        .with_boundary(ScalarField::constant(1.0));
        assert!(matches!(
            solve_parabolic(&p, &st(&[0.5], 1.0), &quad(1e-8)),
            Err(GreenError::Unsupported(_))
        ));
        assert!(solve_parabolic(&p, &st(&[0.5], 0.0), &quad(1e-8)).is_err());
        let ball = DomainSpec::ball(3, 1.0, crate::geometry::BallSide::Interior).unwrap();
        let p = BoundaryValueProblem::parabolic(
            ball,
            Representation::Dirichlet,
            ScalarField::constant(1.0),
        );
        assert!(matches!(
            solve_parabolic(&p, &st(&[0.0; 3], 1.0), &quad(1e-8)),
            Err(GreenError::Unsupported(_))
        ));
    }
}
