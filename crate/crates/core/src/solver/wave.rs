use std::f64::consts::PI;

use super::{pole_toward, Tracker};
use crate::error::{GreenError, Result};
use crate::field::ScalarField;
use crate::geometry::{DomainSpec, SpaceTimePoint};
use crate::problem::{BoundaryValueProblem, PdeClass, WaveBranch};
use crate::quadrature::{integrate, sphere_integral, QuadratureSpec};

/// Step of the finite-difference gradient of the initial data.
const GRAD_STEP: f64 = 1e-3;

/// Wave solution in free 3-space for `(1/4π)(Δ − ∂ₜ²)Ψ = −f`:
///
/// `Ψ = ∂ₜ(t M_t[ψ]) + t M_t[ψₜ] + ∫ f(y, t ∓ |x − y|)/|x − y| dy`,
///
/// where `M_t` is the mean over the sphere of radius `t` about `x`. The
/// source term uses the retarded time by default and the advanced time on
/// the advanced branch. All data must have compact support.
pub fn solve_wave_retarded(
    bvp: &BoundaryValueProblem,
    eval_at: &SpaceTimePoint,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if bvp.class != PdeClass::Hyperbolic {
        return Err(GreenError::InvalidParameter(format!(
            "expected a hyperbolic problem, got {}",
            bvp.class
        )));
    }
    bvp.validate()?;
    if bvp.domain != (DomainSpec::FreeSpace { dim: 3 }) {
        return Err(GreenError::Unsupported(format!(
            "wave solutions on {}",
            bvp.domain
        )));
    }
    let zero = ScalarField::zero();
    let psi = bvp.initial.as_ref().unwrap_or(&zero);
    let psi_t = bvp.initial_rate.as_ref().unwrap_or(&zero);
    for (name, g) in [
        ("source", &bvp.source),
        ("initial data", psi),
        ("initial rate", psi_t),
    ] {
        if !g.is_zero() && !g.support().is_compact() {
            return Err(GreenError::InvalidParameter(format!(
                "{name} must have compact support"
            )));
        }
    }
    let t = eval_at.time;
    if !(t >= 0.0) {
        return Err(GreenError::InvalidParameter(format!(
            "evaluation time must be non-negative, got {t}"
        )));
    }
    let x: &[f64] = &eval_at.space;
    bvp.domain.check_point(x)?;
    if t == 0.0 {
        return Ok(psi.eval(x, 0.0));
    }
    let tracker = Tracker::new(quad);
    let abs = quad.target_tol / 4.0;

    let mean = |g: &dyn Fn(&[f64]) -> f64, field: &ScalarField| -> f64 {
        if !shell_meets(field, x, t) {
            return 0.0;
        }
        let pole = pole_toward(field.support(), x);
        let a = abs * 4.0 * PI * t * t;
        let r = sphere_integral(g, x, t, &pole, tracker.tol(a));
        tracker.take(r, a) / (4.0 * PI * t * t)
    };

    let mut total = 0.0;
    if !psi.is_zero() {
        total += mean(&|y| psi.eval(y, 0.0), psi);
        let radial_derivative = |y: &[f64]| {
            let g = psi.gradient(y, 0.0, GRAD_STEP);
            (0..3).map(|i| g[i] * (y[i] - x[i])).sum::<f64>() / t
        };
        total += t * mean(&radial_derivative, psi);
    }
    if !psi_t.is_zero() {
        total += t * mean(&|y| psi_t.eval(y, 0.0), psi_t);
    }
    total += source(bvp, x, t, abs, &tracker);
    tracker.finish(total)
}

/// Whether the sphere of radius `r` about `x` can meet the support.
fn shell_meets(field: &ScalarField, x: &[f64], r: f64) -> bool {
    let s = field.support();
    s.min_distance(x) <= r && r <= s.max_distance(x)
}

/// `∫ dρ (1/ρ) ∫_{|y−x|=ρ} f(y, t ∓ ρ) dA` over the shells that meet the
/// support.
fn source(bvp: &BoundaryValueProblem, x: &[f64], t: f64, abs: f64, tracker: &Tracker) -> f64 {
    let f = &bvp.source;
    if f.is_zero() {
        return 0.0;
    }
    let lo = f.support().min_distance(x);
    let mut hi = f.support().max_distance(x);
    let sign = match bvp.branch {
        WaveBranch::Retarded => {
            hi = hi.min(t);
            -1.0
        }
        WaveBranch::Advanced => 1.0,
    };
    if lo >= hi {
        return 0.0;
    }
    let pole = pole_toward(f.support(), x);
    let inner = |rho: f64| 0.5 * abs * rho / (hi - lo);
    let r = integrate(
        |rho| {
            let time = t + sign * rho;
            let a = inner(rho).max(1e-300);
            let s = sphere_integral(|y| f.eval(y, time), x, rho, &pole, tracker.tol(a));
            tracker.take(s, a) / rho
        },
        lo,
        hi,
        tracker.tol(abs),
    );
    tracker.take(r, abs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::Representation;
    use crate::field::Support;
    use crate::geometry::Point;
    use crate::quadrature::QuadratureMethod;
    use crate::solver::solve_elliptic;

    fn st(x: &[f64], t: f64) -> SpaceTimePoint {
        SpaceTimePoint::new(Point::new(x.to_vec()).unwrap(), t).unwrap()
    }

    fn quad(tol: f64) -> QuadratureSpec {
        QuadratureSpec::new(QuadratureMethod::Adaptive1d, tol, 50_000_000).unwrap()
    }

    fn ball(r: f64) -> Support {
        Support::Ball {
            center: vec![0.0; 3],
            radius: r,
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let p = BoundaryValueProblem::hyperbolic(ScalarField::zero(), ScalarField::zero());
        assert_eq!(
            solve_wave_retarded(&p, &st(&[0.1, 0.2, 0.3], 2.0), &quad(1e-8)).unwrap(),
            0.0
        );
    }

    #[test]
    fn static_limit_matches_elliptic() {
        let f = ScalarField::parse("(1 - 4*(x1^2 + x2^2 + x3^2))^2", ball(0.5)).unwrap();
        let wave = BoundaryValueProblem::hyperbolic(ScalarField::zero(), ScalarField::zero())
            .with_source(f.clone());
        let x = [0.3, 0.2, 0.1];
        let w = solve_wave_retarded(&wave, &st(&x, 10.0), &quad(1e-9)).unwrap();
        let ell = BoundaryValueProblem::elliptic(
            DomainSpec::free_space(3).unwrap(),
            Representation::Dirichlet,
        )
        .with_source(f);
        let e = solve_elliptic(&ell, &Point::new(x.to_vec()).unwrap(), &quad(1e-9)).unwrap();
        assert!((w - e).abs() < 1e-6 * e.abs(), "{w} vs {e}");
        // Before the signal from the far side arrives the two differ.
        let early = solve_wave_retarded(&wave, &st(&x, 0.2), &quad(1e-9)).unwrap();
        assert!(early < 0.5 * e);
    }

    #[test]
    fn radial_bump_matches_dalembert() {
        let bump = |r: f64| {
            if r.abs() < 1.0 {
                (1.0 - r * r).powi(4)
            } else {
                0.0
            }
        };
        let psi = ScalarField::spatial(
            move |y| bump((y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt()),
            ball(1.0),
        );
        let p = BoundaryValueProblem::hyperbolic(psi, ScalarField::zero());
        for (r, t) in [(0.5, 0.3), (1.5, 1.0), (2.0, 1.6), (0.4, 2.0)] {
            let want = ((r - t) * bump(r - t) + (r + t) * bump(r + t)) / (2.0 * r);
            let v = solve_wave_retarded(&p, &st(&[0.0, r, 0.0], t), &quad(1e-9)).unwrap();
            assert!((v - want).abs() < 1e-7, "r = {r}, t = {t}: {v} vs {want}");
        }
    }

    #[test]
    fn initial_rate_term() {
        // ψₜ = 1 on a ball of radius a, centre: u(0, t) = t for t < a.
        let p = BoundaryValueProblem::hyperbolic(
            ScalarField::zero(),
            ScalarField::parse("1", ball(1.0)).unwrap(),
        );
        let v = solve_wave_retarded(&p, &st(&[0.0; 3], 0.5), &quad(1e-10)).unwrap();
        assert!((v - 0.5).abs() < 1e-9, "{v}");
        assert_eq!(
            solve_wave_retarded(&p, &st(&[0.0; 3], 1.5), &quad(1e-10)).unwrap(),
            0.0
        );
    }

    #[test]
    fn advanced_branch_sees_future_source() {
        // A source switched on at t = 1 is invisible to the retarded
        // solution at t = 0.5 but not to the advanced one.
        let f = ScalarField::new(|_, s| if s >= 1.0 { 1.0 } else { 0.0 }, ball(0.2));
        let ret = BoundaryValueProblem::hyperbolic(ScalarField::zero(), ScalarField::zero())
            .with_source(f);
        let adv = ret.clone().with_branch(WaveBranch::Advanced);
        let x = [0.0, 0.0, 0.0];
        assert_eq!(
            solve_wave_retarded(&ret, &st(&x, 0.5), &quad(1e-8)).unwrap(),
            0.0
        );
        assert!(solve_wave_retarded(&adv, &st(&x, 0.9), &quad(1e-6)).unwrap() > 0.0);
    }

    #[test]
    fn rejects_non_compact_data() {
        let p = BoundaryValueProblem::hyperbolic(ScalarField::constant(1.0), ScalarField::zero());
        assert!(matches!(
            solve_wave_retarded(&p, &st(&[0.0; 3], 1.0), &quad(1e-8)),
            Err(GreenError::InvalidParameter(_))
        ));
    }
}
