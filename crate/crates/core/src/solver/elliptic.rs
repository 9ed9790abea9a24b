use std::f64::consts::PI;

use super::region::Region;
use super::{pole_toward, ray_exit, ray_support, Tracker};
use crate::covering::Representation;
use crate::error::{GreenError, Result};
use crate::field::{ScalarField, Support};
use crate::geometry::{BallSide, DomainSpec, Point, BOUNDARY_TOL};
use crate::kernels::{
    ball_poisson_kernel, domain_green, free_elliptic, half_space_poisson_kernel,
    quadrant_harmonic_density,
};
use crate::problem::{BoundaryValueProblem, PdeClass};
use crate::quadrature::{
    circle_integral, integrate, integrate_breaks, integrate_real_line, integrate_to_infinity,
    sphere_integral, QuadratureMethod, QuadratureSpec,
};

/// `Ψ(x) = ∫_U K_U(x, x′) f(x′) dx′ + ∫_∂U K_∂(x, x_B) φ(x_B) dx_B`.
///
/// With Neumann data the boundary term is `(1/4π)∫ K_U(x, x_B) g(x_B) dx_B`
/// for the outward normal derivative `g`. At a point of a Dirichlet boundary
/// the boundary data is returned.
pub fn solve_elliptic(
    bvp: &BoundaryValueProblem,
    eval_at: &Point,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if bvp.class != PdeClass::Elliptic {
        return Err(GreenError::InvalidParameter(format!(
            "expected an elliptic problem, got {}",
            bvp.class
        )));
    }
    bvp.validate()?;
    let domain = &bvp.domain;
    let x: &[f64] = eval_at;
    domain.check_point(x)?;
    let clearance = domain.clearance(x);
    if clearance < -BOUNDARY_TOL {
        return Err(GreenError::OutsideDomain(x.to_vec()));
    }
    if clearance <= BOUNDARY_TOL {
        return match bvp.bc {
            Representation::Dirichlet => Ok(bvp.boundary.eval(x, 0.0)),
            Representation::Neumann => Err(GreenError::OutsideDomain(x.to_vec())),
        };
    }
    let tracker = Tracker::new(quad);
    let abs = 0.5 * quad.target_tol;
    let src = source_term(domain, bvp.bc, &bvp.source, x, quad.method, abs, &tracker)?;
    let bnd = boundary_term(bvp, x, abs, &tracker)?;
    tracker.finish(src + bnd)
}

/// `∫ G(x, x′) f(x′) dx′` in polar coordinates about `x`, which removes the
/// kernel singularity.
fn source_term(
    domain: &DomainSpec,
    bc: Representation,
    f: &ScalarField,
    x: &[f64],
    method: QuadratureMethod,
    abs: f64,
    tracker: &Tracker,
) -> Result<f64> {
    if f.is_zero() {
        return Ok(0.0);
    }
    if !domain.is_bounded() && !f.support().is_compact() {
        return Err(GreenError::InvalidParameter(
            "sources on unbounded domains need a compact support".into(),
        ));
    }
    let n = x.len();
    let green_tol = (abs * 1e-2).max(1e-14);
    let radial = |omega: &[f64], inner_abs: f64| -> f64 {
        let exit = tracker.value(ray_exit(domain, x, omega));
        let Some((a, b)) = ray_support(f.support(), x, omega) else {
            return 0.0;
        };
        let b = b.min(exit);
        if !(a < b) || !b.is_finite() {
            return 0.0;
        }
        let mut y = vec![0.0; n];
        let r = integrate(
            |rho| {
                for i in 0..n {
                    y[i] = x[i] + rho * omega[i];
                }
                if domain.clearance(&y) < 0.0 {
                    return 0.0;
                }
                let fy = f.eval(&y, 0.0);
                if fy == 0.0 {
                    return 0.0;
                }
                tracker.value(domain_green(domain, bc, x, &y, green_tol))
                    * fy
                    * rho.powi(n as i32 - 1)
            },
            a,
            b,
            tracker.tol(inner_abs),
        );
        tracker.take(r, inner_abs)
    };
    Ok(match n {
        1 => radial(&[1.0], 0.5 * abs) + radial(&[-1.0], 0.5 * abs),
        2 => {
            let inner = 0.5 * abs / (2.0 * PI);
            let r = integrate(
                |t| radial(&[t.cos(), t.sin()], inner),
                -PI,
                PI,
                tracker.tol(abs),
            );
            tracker.take(r, abs)
        }
        3 => {
            let inner = 0.5 * abs / (4.0 * PI);
            let pole = pole_toward(f.support(), x);
            let r = match method {
                QuadratureMethod::TensorGauss => {
                    let region = Region::window(domain, f.support(), x, f64::INFINITY);
                    let Some(region) = region else { return Ok(0.0) };
                    let mut g = |y: &[f64]| {
                        if domain.clearance(y) < 0.0 || y == x {
                            return 0.0;
                        }
                        f.eval(y, 0.0) * tracker.value(domain_green(domain, bc, x, y, green_tol))
                    };
                    return Ok(region.integrate(&mut g, method, abs, tracker));
                }
                _ => sphere_integral(
                    |w| radial(w, inner),
                    &[0.0; 3],
                    1.0,
                    &pole,
                    tracker.tol(abs),
                ),
            };
            tracker.take(r, abs)
        }
        _ => {
            return Err(GreenError::Unsupported(format!(
                "source integration in {n} dimensions"
            )))
        }
    })
}

/// The part of `support` on the hyperplane `x[axis] = offset`, in the
/// remaining coordinates. `None` when the plane misses the support.
fn trace(support: &Support, axis: usize, offset: f64) -> Option<Support> {
    let drop = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .enumerate()
            .filter(|(i, _)| *i != axis)
            .map(|(_, c)| *c)
            .collect()
    };
    match support {
        Support::Everywhere => Some(Support::Everywhere),
        Support::Box { lo, hi } => {
            (lo[axis] <= offset && offset <= hi[axis]).then(|| Support::Box {
                lo: drop(lo),
                hi: drop(hi),
            })
        }
        Support::Ball { center, radius } => {
            let h2 = radius * radius - (center[axis] - offset).powi(2);
            (h2 > 0.0).then(|| Support::Ball {
                center: drop(center),
                radius: h2.sqrt(),
            })
        }
    }
}

/// `∫_{ℝ^{n−1}} g(x_B) dx_B` over the wall `xⁿ = 0` of a half-space, where
/// `g` is zero off the trace of `support` and peaks at the foot of `x`.
fn wall_integral(
    g: &mut dyn FnMut(&[f64]) -> f64,
    support: &Support,
    x: &[f64],
    abs: f64,
    tracker: &Tracker,
) -> Result<f64> {
    let n = x.len();
    let Some(tr) = trace(support, n - 1, 0.0) else {
        return Ok(0.0);
    };
    let foot = &x[..n - 1];
    let mut lift = |t: &[f64]| {
        let mut xb = t.to_vec();
        xb.push(0.0);
        g(&xb)
    };
    if tr.is_compact() {
        let free = DomainSpec::free_space(n - 1)?;
        return Ok(match Region::window(&free, &tr, foot, f64::INFINITY) {
            Some(region) => region.integrate(&mut lift, QuadratureMethod::Adaptive1d, abs, tracker),
            None => 0.0,
        });
    }
    match n {
        2 => {
            let r = integrate_real_line(|t| lift(&[t]), foot[0], tracker.tol(abs));
            Ok(tracker.take(r, abs))
        }
        3 => {
            let inner = 0.5 * abs / (2.0 * PI);
            let mut ring = |rho: f64| {
                let r = integrate(
                    |th| lift(&[foot[0] + rho * th.cos(), foot[1] + rho * th.sin()]),
                    -PI,
                    PI,
                    tracker.tol(inner),
                );
                rho * tracker.take(r, inner)
            };
            // Split at the height of the point, the scale of the kernel.
            let h = x[n - 1];
            let near = integrate_breaks(&mut ring, &[0.0, h], tracker.tol(0.5 * abs));
            let near = tracker.take(near, 0.5 * abs);
            let far = integrate_to_infinity(&mut ring, h, tracker.tol(0.5 * abs));
            Ok(near + tracker.take(far, 0.5 * abs))
        }
        _ => Err(GreenError::Unsupported(format!(
            "boundary integration in {n} dimensions"
        ))),
    }
}

fn boundary_term(
    bvp: &BoundaryValueProblem,
    x: &[f64],
    abs: f64,
    tracker: &Tracker,
) -> Result<f64> {
    let phi = &bvp.boundary;
    if phi.is_zero() {
        return Ok(0.0);
    }
    let n = x.len();
    match (bvp.domain, bvp.bc) {
        (DomainSpec::Ball { dim, radius, side }, Representation::Dirichlet) => {
            let kernel = |xb: &[f64]| ball_poisson_kernel(dim, radius, x, xb) * phi.eval(xb, 0.0);
            let pole = if x.iter().any(|v| *v != 0.0) {
                x.to_vec()
            } else {
                pole_toward(phi.support(), &vec![0.0; n])
            };
            let r = match dim {
                1 if side == BallSide::Interior => {
                    return Ok(kernel(&[radius]) + kernel(&[-radius]))
                }
                2 => circle_integral(kernel, &[0.0; 2], radius, &pole, tracker.tol(abs)),
                3 => sphere_integral(kernel, &[0.0; 3], radius, &pole, tracker.tol(abs)),
                _ => {
                    return Err(GreenError::Unsupported(format!(
                        "ball boundary integration for {}",
                        bvp.domain
                    )))
                }
            };
            Ok(tracker.take(r, abs))
        }
        (DomainSpec::HalfSpace { .. }, Representation::Dirichlet) => {
            if n == 1 {
                return Ok(phi.eval(&[0.0], 0.0));
            }
            let mut g = |xb: &[f64]| {
                let v = phi.eval(xb, 0.0);
                if v == 0.0 {
                    0.0
                } else {
                    half_space_poisson_kernel(x, xb) * v
                }
            };
            wall_integral(&mut g, phi.support(), x, abs, tracker)
        }
        (DomainSpec::HalfSpace { .. }, Representation::Neumann) => {
            if n == 1 {
                return Err(GreenError::Unsupported(
                    "Neumann data on the half-line".into(),
                ));
            }
            if !phi.support().is_compact() {
                return Err(GreenError::InvalidParameter(
                    "Neumann data needs a compact support".into(),
                ));
            }
            let mut g = |xb: &[f64]| {
                let v = phi.eval(xb, 0.0);
                if v == 0.0 {
                    return 0.0;
                }
                let r = crate::geometry::dist(x, xb);
                2.0 * tracker.value(free_elliptic(n, r)) * v / (4.0 * PI)
            };
            wall_integral(&mut g, phi.support(), x, abs, tracker)
        }
        (DomainSpec::Quadrant, Representation::Dirichlet) => {
            let mut total = 0.0;
            for (wall, free) in [(1usize, 0usize), (0, 1)] {
                let Some(tr) = trace(phi.support(), wall, 0.0) else {
                    continue;
                };
                let at = |t: f64| {
                    let mut xb = [0.0; 2];
                    xb[free] = t;
                    let v = phi.eval(&xb, 0.0);
                    if v == 0.0 {
                        0.0
                    } else {
                        tracker.value(quadrant_harmonic_density(x, &xb)) * v
                    }
                };
                let peak = x[free];
                let r = match tr.bounding_box() {
                    Some((lo, hi)) => {
                        let (a, b) = (lo[0].max(0.0), hi[0]);
                        if a >= b {
                            continue;
                        }
                        let mut pts = vec![a];
                        if peak > a && peak < b {
                            pts.push(peak);
                        }
                        pts.push(b);
                        let mut at = at;
                        integrate_breaks(&mut at, &pts, tracker.tol(0.5 * abs))
                    }
                    None => {
                        let near = integrate(at, 0.0, peak, tracker.tol(0.25 * abs));
                        let near = tracker.take(near, 0.25 * abs);
                        let far = integrate_to_infinity(at, peak, tracker.tol(0.25 * abs));
                        total += near;
                        far
                    }
                };
                total += tracker.take(r, 0.5 * abs);
            }
            Ok(total)
        }
        (DomainSpec::FreeSpace { .. }, _) => Err(GreenError::InvalidParameter(
            "free space has no boundary to carry data".into(),
        )),
        _ => Err(GreenError::Unsupported(format!(
            "{} boundary data on {}",
            bvp.bc, bvp.domain
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball3() -> DomainSpec {
        DomainSpec::ball(3, 1.0, BallSide::Interior).unwrap()
    }

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn quad(tol: f64) -> QuadratureSpec {
        QuadratureSpec::new(QuadratureMethod::Adaptive1d, tol, 50_000_000).unwrap()
    }

    #[test]
    fn ball_examples() {
        let unit = BoundaryValueProblem::elliptic(ball3(), Representation::Dirichlet)
            .with_boundary(ScalarField::constant(1.0));
        for x in [[0.0, 0.0, 0.0], [0.3, -0.2, 0.5], [0.0, 0.0, 0.95]] {
            let v = solve_elliptic(&unit, &pt(&x), &quad(1e-10)).unwrap();
            assert!((v - 1.0).abs() < 1e-9, "{x:?}: {v}");
        }
        let linear = BoundaryValueProblem::elliptic(ball3(), Representation::Dirichlet)
            .with_boundary(ScalarField::parse("x1", Support::Everywhere).unwrap());
        let v = solve_elliptic(&linear, &pt(&[0.5, 0.0, 0.0]), &quad(1e-10)).unwrap();
        assert!((v - 0.5).abs() < 1e-9, "{v}");
        let source = BoundaryValueProblem::elliptic(ball3(), Representation::Dirichlet)
            .with_source(ScalarField::constant(1.0));
        let v = solve_elliptic(&source, &pt(&[0.0; 3]), &quad(1e-9)).unwrap();
        assert!((v - 2.0 * PI / 3.0).abs() < 1e-8, "{v}");
        // Mean exit time profile 2π(1 − r²)/3 off centre.
        let v = solve_elliptic(&source, &pt(&[0.0, 0.6, 0.0]), &quad(1e-9)).unwrap();
        assert!((v - 2.0 * PI * 0.64 / 3.0).abs() < 1e-7, "{v}");
    }

    #[test]
    fn boundary_point_returns_data() {
        let p = BoundaryValueProblem::elliptic(ball3(), Representation::Dirichlet)
            .with_boundary(ScalarField::parse("x2 + 3", Support::Everywhere).unwrap());
        assert_eq!(
            solve_elliptic(&p, &pt(&[0.0, 1.0, 0.0]), &quad(1e-8)).unwrap(),
            4.0
        );
        assert!(matches!(
            solve_elliptic(&p, &pt(&[0.0, 2.0, 0.0]), &quad(1e-8)),
            Err(GreenError::OutsideDomain(_))
        ));
    }

    #[test]
    fn free_space_source_matches_point_charge_far_away() {
        // Uniform unit ball of charge: potential outside is (4π/3)/r.
        let f = ScalarField::parse(
            "1",
            Support::Ball {
                center: vec![0.0; 3],
                radius: 1.0,
            },
        )
        .unwrap();
        let p = BoundaryValueProblem::elliptic(
            DomainSpec::free_space(3).unwrap(),
            Representation::Dirichlet,
        )
        .with_source(f);
        let v = solve_elliptic(&p, &pt(&[0.0, 0.0, 3.0]), &quad(1e-9)).unwrap();
        assert!((v - 4.0 * PI / 9.0).abs() < 1e-7, "{v}");
        // Inside: 2π(3 − r²)/3.
        let v = solve_elliptic(&p, &pt(&[0.5, 0.0, 0.0]), &quad(1e-9)).unwrap();
        assert!((v - 2.0 * PI * 2.75 / 3.0).abs() < 1e-7, "{v}");
    }

    #[test]
    fn half_plane_and_quadrant_harmonic_data() {
        // φ = x1 on the wall of the half-plane extends to Ψ = x1 only for
        // bounded data; use a bounded harmonic function instead:
        // Ψ = Im(−1/(z + i)) → φ(t) = 1/(t² + 1).
        let hp = DomainSpec::half_space(2).unwrap();
        let phi = ScalarField::parse("1/(x1^2 + 1)", Support::Everywhere).unwrap();
        let p = BoundaryValueProblem::elliptic(hp, Representation::Dirichlet).with_boundary(phi);
        let (a, b) = (0.4, 0.7);
        let want = (b + 1.0) / (a * a + (b + 1.0) * (b + 1.0));
        let v = solve_elliptic(&p, &pt(&[a, b]), &quad(1e-10)).unwrap();
        assert!((v - want).abs() < 1e-9, "{v} vs {want}");

        let q = BoundaryValueProblem::elliptic(DomainSpec::Quadrant, Representation::Dirichlet)
            .with_boundary(ScalarField::constant(2.0));
        let v = solve_elliptic(&q, &pt(&[0.7, 1.9]), &quad(1e-10)).unwrap();
        assert!((v - 2.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn half_space_3d_constant_data() {
        let p = BoundaryValueProblem::elliptic(
            DomainSpec::half_space(3).unwrap(),
            Representation::Dirichlet,
        )
        .with_boundary(ScalarField::constant(1.5));
        let v = solve_elliptic(&p, &pt(&[0.1, 0.2, 0.3]), &quad(1e-9)).unwrap();
        assert!((v - 1.5).abs() < 1e-8, "{v}");
    }

    #[test]
    fn unsupported_combinations() {
        let strip = DomainSpec::unit_strip(2).unwrap();
        let p = BoundaryValueProblem::elliptic(strip, Representation::Dirichlet)
            .with_boundary(ScalarField::constant(1.0));
        assert!(matches!(
            solve_elliptic(&p, &pt(&[0.0, 0.5]), &quad(1e-8)),
            Err(GreenError::Unsupported(_))
        ));
        let p = BoundaryValueProblem::elliptic(
            DomainSpec::free_space(3).unwrap(),
            Representation::Dirichlet,
        )
        .with_source(ScalarField::constant(1.0));
        assert!(matches!(
            solve_elliptic(&p, &pt(&[0.0; 3]), &quad(1e-8)),
            Err(GreenError::InvalidParameter(_))
        ));
    }
}
