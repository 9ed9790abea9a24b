//! Integration over a box, optionally clipped by a ball.

use super::Tracker;
use crate::field::Support;
use crate::geometry::DomainSpec;
use crate::quadrature::{integrate_breaks, tensor_gauss_adaptive, QuadratureMethod};

#[derive(Debug, Clone)]
pub(crate) struct Region {
    lo: Vec<f64>,
    hi: Vec<f64>,
    ball: Option<(Vec<f64>, f64)>,
    /// Per-axis coordinate where the integrand peaks.
    peak: Vec<f64>,
}

impl Region {
    /// `x ± half_width` on every axis, cut down to the domain and the support.
    /// `None` when the intersection is empty.
    pub fn window(
        domain: &DomainSpec,
        support: &Support,
        x: &[f64],
        half_width: f64,
    ) -> Option<Self> {
        let n = x.len();
        let mut lo: Vec<f64> = x.iter().map(|v| v - half_width).collect();
        let mut hi: Vec<f64> = x.iter().map(|v| v + half_width).collect();
        for i in 0..n {
            let (a, b) = super::axis_range(domain, i);
            lo[i] = lo[i].max(a);
            hi[i] = hi[i].min(b);
        }
        if let Some((slo, shi)) = support.bounding_box() {
            for i in 0..n {
                lo[i] = lo[i].max(slo[i]);
                hi[i] = hi[i].min(shi[i]);
            }
        }
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return None;
        }
        let ball = match support {
            Support::Ball { center, radius } => Some((center.clone(), *radius)),
            _ => None,
        };
        Some(Self {
            lo,
            hi,
            ball,
            peak: x.to_vec(),
        })
    }

    /// Iterated adaptive Gauss–Kronrod (or tensor Gauss over the bounding
    /// box) of `f` to absolute accuracy about `abs`.
    pub fn integrate(
        &self,
        f: &mut dyn FnMut(&[f64]) -> f64,
        method: QuadratureMethod,
        abs: f64,
        tracker: &Tracker,
    ) -> f64 {
        if method == QuadratureMethod::TensorGauss {
            let mut g = |y: &[f64]| if self.in_ball(y) { f(y) } else { 0.0 };
            let r = tensor_gauss_adaptive(&mut g, &self.lo, &self.hi, tracker.tol(abs));
            return tracker.take(r, abs);
        }
        let mut prefix = vec![0.0; self.lo.len()];
        self.level(0, &mut prefix, f, abs, tracker)
    }

    fn in_ball(&self, y: &[f64]) -> bool {
        match &self.ball {
            None => true,
            Some((c, r)) => crate::geometry::dist(y, c) <= *r,
        }
    }

    fn level(
        &self,
        k: usize,
        prefix: &mut Vec<f64>,
        f: &mut dyn FnMut(&[f64]) -> f64,
        abs: f64,
        tracker: &Tracker,
    ) -> f64 {
        let (mut a, mut b) = (self.lo[k], self.hi[k]);
        if let Some((c, r)) = &self.ball {
            let used: f64 = (0..k).map(|j| (prefix[j] - c[j]).powi(2)).sum();
            let rem = r * r - used;
            if rem <= 0.0 {
                return 0.0;
            }
            let h = rem.sqrt();
            a = a.max(c[k] - h);
            b = b.min(c[k] + h);
        }
        if a >= b {
            return 0.0;
        }
        let mut points = vec![a];
        if self.peak[k] > a && self.peak[k] < b {
            points.push(self.peak[k]);
        }
        points.push(b);
        let last = k + 1 == self.lo.len();
        let inner_abs = 0.5 * abs / (b - a);
        let mut g = |y: f64| {
            prefix[k] = y;
            if last {
                f(prefix)
            } else {
                self.level(k + 1, prefix, f, inner_abs, tracker)
            }
        };
        let r = integrate_breaks(&mut g, &points, tracker.tol(abs));
        tracker.take(r, abs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadratureSpec;

    #[test]
    fn ball_volume_by_iterated_integration() {
        let quad = QuadratureSpec::default();
        let t = Tracker::new(&quad);
        let support = Support::Ball {
            center: vec![0.0; 3],
            radius: 1.0,
        };
        let free = DomainSpec::free_space(3).unwrap();
        let r = Region::window(&free, &support, &[0.2, 0.0, 0.0], 10.0).unwrap();
        let v = r.integrate(&mut |_| 1.0, QuadratureMethod::Adaptive1d, 1e-9, &t);
        assert!((v - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-8, "{v}");
        assert!(t.finish(v).is_ok());
    }

    #[test]
    fn window_respects_domain() {
        let hs = DomainSpec::half_space(2).unwrap();
        let r = Region::window(&hs, &Support::Everywhere, &[0.0, 0.5], 1.0).unwrap();
        assert_eq!(r.lo, vec![-1.0, 0.0]);
        assert_eq!(r.hi, vec![1.0, 1.5]);
        let far = Support::Box {
            lo: vec![5.0, 5.0],
            hi: vec![6.0, 6.0],
        };
        assert!(Region::window(&hs, &far, &[0.0, 0.5], 1.0).is_none());
    }
}
