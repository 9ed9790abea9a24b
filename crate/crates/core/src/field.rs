//! Scalar data fields (sources, boundary data, Cauchy data).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{GreenError, Result};
use crate::expr::Expr;
use crate::geometry::dist;

/// Region outside of which a field is identically zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Support {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Everywhere,
}

impl Support {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Self::Everywhere => Ok(()),
            Self::Box { lo, hi } => {
                if lo.len() != dim || hi.len() != dim {
                    return Err(GreenError::DimensionMismatch {
                        expected: dim,
                        got: lo.len().min(hi.len()),
                    });
                }
                if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return Err(GreenError::InvalidParameter(
                        "support box needs lo < hi on every axis".into(),
                    ));
                }
                Ok(())
            }
            Self::Ball { center, radius } => {
                if center.len() != dim {
                    return Err(GreenError::DimensionMismatch {
                        expected: dim,
                        got: center.len(),
                    });
                }
                if !(*radius > 0.0) {
                    return Err(GreenError::InvalidParameter(
                        "support radius must be positive".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Self::Everywhere => true,
            Self::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| *a <= *v && *v <= *b),
            Self::Ball { center, radius } => dist(x, center) <= *radius,
        }
    }

    pub fn is_compact(&self) -> bool {
        !matches!(self, Self::Everywhere)
    }

    /// Axis-aligned bounding box, if compact.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Self::Everywhere => None,
            Self::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            Self::Ball { center, radius } => Some((
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
        }
    }

    /// A representative point, used to orient cubature rules.
    pub fn center(&self) -> Option<Vec<f64>> {
        self.bounding_box()
            .map(|(lo, hi)| lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect())
    }

    /// Largest distance from `x` to a point of the support.
    pub fn max_distance(&self, x: &[f64]) -> f64 {
        match self {
            Self::Everywhere => f64::INFINITY,
            Self::Ball { center, radius } => dist(x, center) + radius,
            Self::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (a, b))| (v - a).abs().max((v - b).abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Smallest distance from `x` to the support.
    pub fn min_distance(&self, x: &[f64]) -> f64 {
        match self {
            Self::Everywhere => 0.0,
            Self::Ball { center, radius } => (dist(x, center) - radius).max(0.0),
            Self::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (a, b))| (a - v).max(v - b).max(0.0).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

type Evaluator = dyn Fn(&[f64], f64) -> f64 + Send + Sync;

/// A real field of space (and optionally time), zero outside its support.
#[derive(Clone)]
pub struct ScalarField {
    f: Arc<Evaluator>,
    support: Support,
    constant: Option<f64>,
    label: String,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("label", &self.label)
            .field("support", &self.support)
            .finish()
    }
}

impl ScalarField {
    pub fn new<F>(f: F, support: Support) -> Self
    where
        F: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            f: Arc::new(f),
            support,
            constant: None,
            label: "<closure>".into(),
        }
    }

    /// A time-independent field.
    pub fn spatial<F>(f: F, support: Support) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(move |x, _| f(x), support)
    }

    pub fn constant(c: f64) -> Self {
        Self {
            f: Arc::new(move |_, _| c),
            support: Support::Everywhere,
            constant: Some(c),
            label: format!("{c}"),
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn from_expr(expr: Expr, support: Support) -> Self {
        let constant = if support.is_compact() {
            None
        } else {
            expr.constant_value()
        };
        let label = expr.to_string();
        Self {
            f: Arc::new(move |x, t| expr.eval(x, t)),
            support,
            constant,
            label,
        }
    }

    pub fn parse(src: &str, support: Support) -> Result<Self> {
        Ok(Self::from_expr(src.parse()?, support))
    }

    #[inline]
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        if !self.support.contains(x) {
            return 0.0;
        }
        (self.f)(x, t)
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    /// The value when the field is a known constant over all space.
    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    pub fn is_zero(&self) -> bool {
        self.constant == Some(0.0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The field multiplied by a constant.
    pub fn scaled(&self, a: f64) -> Self {
        let inner = self.clone();
        Self {
            f: Arc::new(move |x, t| a * inner.eval(x, t)),
            support: self.support.clone(),
            constant: self.constant.map(|c| a * c),
            label: format!("{a}*({})", self.label),
        }
    }

    /// Pointwise sum. Supports combine to everywhere unless equal.
    pub fn plus(&self, other: &Self) -> Self {
        let (a, b) = (self.clone(), other.clone());
        let support = if self.support == other.support {
            self.support.clone()
        } else {
            Support::Everywhere
        };
        let constant = match (self.constant, other.constant) {
            (Some(p), Some(q)) => Some(p + q),
            _ => None,
        };
        Self {
            f: Arc::new(move |x, t| a.eval(x, t) + b.eval(x, t)),
            support,
            constant,
            label: format!("({}) + ({})", self.label, other.label),
        }
    }

    /// Central-difference gradient in space (fourth order).
    pub fn gradient(&self, x: &[f64], t: f64, h: f64) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        let mut p = x.to_vec();
        for i in 0..x.len() {
            let mut at = |d: f64| {
                p[i] = x[i] + d;
                let v = self.eval(&p, t);
                p[i] = x[i];
                v
            };
            g[i] = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_cutoff() {
        let f = ScalarField::parse(
            "1 + x1",
            Support::Ball {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
        )
        .unwrap();
        assert_eq!(f.eval(&[0.5, 0.0], 0.0), 1.5);
        assert_eq!(f.eval(&[1.5, 0.0], 0.0), 0.0);
        assert_eq!(f.constant_value(), None);
        assert!(ScalarField::zero().is_zero());
        assert_eq!(
            ScalarField::parse("2*3", Support::Everywhere)
                .unwrap()
                .constant_value(),
            Some(6.0)
        );
    }

    #[test]
    fn distances_to_support() {
        let b = Support::Box {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 2.0],
        };
        assert_eq!(b.min_distance(&[2.0, 1.0]), 1.0);
        assert_eq!(b.max_distance(&[0.0, 0.0]), 5f64.sqrt());
        assert_eq!(b.center().unwrap(), vec![0.5, 1.0]);
        let s = Support::Ball {
            center: vec![0.0; 3],
            radius: 0.5,
        };
        assert_eq!(s.min_distance(&[2.0, 0.0, 0.0]), 1.5);
        assert!(s.validate(2).is_err());
        assert!(Support::Box {
            lo: vec![1.0],
            hi: vec![0.0]
        }
        .validate(1)
        .is_err());
    }

    #[test]
    fn gradient_of_polynomial() {
        let f = ScalarField::parse("x1^3 + x1*x2", Support::Everywhere).unwrap();
        let g = f.gradient(&[0.5, 2.0], 0.0, 1e-3);
        assert!((g[0] - (0.75 + 2.0)).abs() < 1e-12);
        assert!((g[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn linear_combinations() {
        let a = ScalarField::constant(2.0);
        let b = ScalarField::parse("x1", Support::Everywhere).unwrap();
        let c = a.plus(&b.scaled(3.0));
        assert_eq!(c.eval(&[1.0], 0.0), 5.0);
        assert_eq!(a.plus(&a).constant_value(), Some(4.0));
    }
}
