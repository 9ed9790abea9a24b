//! Solutions of boundary-value problems assembled from kernels: source
//! integral, boundary integral and Cauchy integral(s), each by deterministic
//! quadrature.

mod elliptic;
mod parabolic;
mod region;
mod wave;

use std::cell::{Cell, RefCell};

pub use elliptic::solve_elliptic;
pub use parabolic::solve_parabolic;
pub use wave::solve_wave_retarded;

use crate::error::{GreenError, Result};
use crate::field::Support;
use crate::geometry::{BallSide, DomainSpec};
use crate::quadrature::{QuadResult, QuadratureSpec, Tolerance};

/// Bookkeeping shared by the nested integrals of one solve: evaluation
/// count, unconverged inner integrals, and the first kernel error raised
/// inside an integrand.
pub(crate) struct Tracker {
    target: f64,
    max_evals: usize,
    evals: Cell<usize>,
    worst: Cell<f64>,
    failed: Cell<bool>,
    error: RefCell<Option<GreenError>>,
}

impl Tracker {
    pub fn new(quad: &QuadratureSpec) -> Self {
        Self {
            target: quad.target_tol,
            max_evals: quad.max_evals,
            evals: Cell::new(0),
            worst: Cell::new(0.0),
            failed: Cell::new(false),
            error: RefCell::new(None),
        }
    }

    pub fn tol(&self, abs: f64) -> Tolerance {
        Tolerance::new(abs, 1e-13).with_max_evals(self.max_evals)
    }

    /// Accept an integral, noting it if it missed its own target by a wide
    /// margin.
    pub fn take(&self, r: QuadResult, abs: f64) -> f64 {
        self.evals.set(self.evals.get().saturating_add(r.evals));
        if !r.converged && r.error > 10.0 * abs.max(1e-13 * r.value.abs()) {
            self.failed.set(true);
            self.worst.set(self.worst.get().max(r.error));
        }
        r.value
    }

    /// Unwrap a kernel value inside an integrand, stashing the first error.
    pub fn value(&self, v: Result<f64>) -> f64 {
        match v {
            Ok(v) => v,
            Err(e) => {
                let mut slot = self.error.borrow_mut();
                if slot.is_none() {
                    *slot = Some(e);
                }
                0.0
            }
        }
    }

    pub fn finish(self, value: f64) -> Result<f64> {
        if let Some(e) = self.error.into_inner() {
            return Err(e);
        }
        let evals = self.evals.get();
        if self.failed.get() || evals > self.max_evals {
            return Err(GreenError::QuadratureFailure {
                target: self.target,
                achieved: self.worst.get(),
                evals,
            });
        }
        if !value.is_finite() {
            return Err(GreenError::QuadratureFailure {
                target: self.target,
                achieved: f64::NAN,
                evals,
            });
        }
        Ok(value)
    }
}

/// Parameter interval `[a, b]` of `x + ρω, ρ ≥ 0` inside a support, or `None`.
pub(crate) fn ray_support(support: &Support, x: &[f64], omega: &[f64]) -> Option<(f64, f64)> {
    match support {
        Support::Everywhere => Some((0.0, f64::INFINITY)),
        Support::Box { lo, hi } => {
            let (mut a, mut b) = (0.0f64, f64::INFINITY);
            for i in 0..x.len() {
                if omega[i] == 0.0 {
                    if x[i] < lo[i] || x[i] > hi[i] {
                        return None;
                    }
                    continue;
                }
                let t1 = (lo[i] - x[i]) / omega[i];
                let t2 = (hi[i] - x[i]) / omega[i];
                a = a.max(t1.min(t2));
                b = b.min(t1.max(t2));
            }
            (a < b).then_some((a, b))
        }
        Support::Ball { center, radius } => {
            let d: Vec<f64> = x.iter().zip(center).map(|(p, c)| p - c).collect();
            let bq: f64 = d.iter().zip(omega).map(|(p, w)| p * w).sum();
            let cq: f64 = d.iter().map(|p| p * p).sum::<f64>() - radius * radius;
            let disc = bq * bq - cq;
            if disc <= 0.0 {
                return None;
            }
            let s = disc.sqrt();
            let (a, b) = ((-bq - s).max(0.0), -bq + s);
            (a < b).then_some((a, b))
        }
    }
}

/// Distance along the ray `x + ρω` from an interior point to the boundary of
/// a convex domain.
pub(crate) fn ray_exit(domain: &DomainSpec, x: &[f64], omega: &[f64]) -> Result<f64> {
    match *domain {
        DomainSpec::FreeSpace { .. } => Ok(f64::INFINITY),
        DomainSpec::Ball {
            radius,
            side: BallSide::Interior,
            ..
        } => {
            let b: f64 = x.iter().zip(omega).map(|(p, w)| p * w).sum();
            let c: f64 = x.iter().map(|p| p * p).sum::<f64>() - radius * radius;
            Ok(-b + (b * b - c).max(0.0).sqrt())
        }
        DomainSpec::Ball { .. } => Err(GreenError::Unsupported(
            "the exterior ball is not convex".into(),
        )),
        _ => Ok(domain
            .faces()
            .iter()
            .filter(|f| f.outward * omega[f.axis] > 0.0)
            .map(|f| f.distance(x) / (f.outward * omega[f.axis]))
            .fold(f64::INFINITY, f64::min)),
    }
}

/// Coordinate range of the domain along one axis.
pub(crate) fn axis_range(domain: &DomainSpec, axis: usize) -> (f64, f64) {
    let mut r = (f64::NEG_INFINITY, f64::INFINITY);
    if let DomainSpec::Ball {
        radius,
        side: BallSide::Interior,
        ..
    } = *domain
    {
        return (-radius, radius);
    }
    for f in domain.faces() {
        if f.axis == axis {
            if f.outward < 0.0 {
                r.0 = r.0.max(f.offset);
            } else {
                r.1 = r.1.min(f.offset);
            }
        }
    }
    r
}

/// Unit direction from `x` toward the support, used to orient sphere rules.
pub(crate) fn pole_toward(support: &Support, x: &[f64]) -> Vec<f64> {
    let mut p = match support.center() {
        Some(c) => c.iter().zip(x).map(|(c, x)| c - x).collect::<Vec<_>>(),
        None => vec![0.0; x.len()],
    };
    if p.iter().all(|v| *v == 0.0) {
        p = vec![0.0; x.len()];
        p[x.len() - 1] = 1.0;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_intersections() {
        let b = Support::Box {
            lo: vec![1.0, -1.0],
            hi: vec![2.0, 1.0],
        };
        assert_eq!(ray_support(&b, &[0.0, 0.0], &[1.0, 0.0]), Some((1.0, 2.0)));
        assert_eq!(ray_support(&b, &[0.0, 0.0], &[-1.0, 0.0]), None);
        let s = Support::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        assert_eq!(ray_support(&s, &[0.0, 0.0], &[0.0, 1.0]), Some((0.0, 1.0)));
        assert_eq!(ray_support(&s, &[-3.0, 0.0], &[1.0, 0.0]), Some((2.0, 4.0)));
        let strip = DomainSpec::unit_strip(2).unwrap();
        let r = ray_exit(&strip, &[0.0, 0.25], &[0.6, 0.8]).unwrap();
        assert!((r - 0.9375).abs() < 1e-15);
        assert_eq!(
            ray_exit(&strip, &[0.0, 0.25], &[1.0, 0.0]).unwrap(),
            f64::INFINITY
        );
        let ball = DomainSpec::ball(3, 2.0, BallSide::Interior).unwrap();
        assert!(
            (ray_exit(&ball, &[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]).unwrap() - 3.0).abs() < 1e-15
        );
        assert_eq!(axis_range(&strip, 1), (0.0, 1.0));
        assert_eq!(axis_range(&DomainSpec::Quadrant, 0), (0.0, f64::INFINITY));
    }
}
