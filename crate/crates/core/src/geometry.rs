//! Canonical flat domains in ℝⁿ.
//!
//! Every other module consumes [`DomainSpec`]: membership, distance to the
//! boundary (used by walk-on-spheres) and outward normals. All boundaries are
//! exactly representable, so a single absolute tolerance
//! [`BOUNDARY_TOL`] absorbs rounding noise.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GreenError, Result};

/// Absolute tolerance for boundary membership.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// A point of ℝⁿ with finite Cartesian coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(GreenError::InvalidParameter(
                "point has no coordinates".into(),
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GreenError::InvalidParameter(format!(
                "non-finite coordinate in {coords:?}"
            )));
        }
        Ok(Self(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

/// A point together with the evolution coordinate x⁰ ≥ 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub space: Point,
    pub time: f64,
}

impl SpaceTimePoint {
    pub fn new(space: Point, time: f64) -> Result<Self> {
        if !(time >= 0.0) || !time.is_finite() {
            return Err(GreenError::InvalidParameter(format!(
                "time must be finite and non-negative, got {time}"
            )));
        }
        Ok(Self { space, time })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BallSide {
    Interior,
    Exterior,
}

/// Tagged description of a canonical domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    FreeSpace {
        dim: usize,
    },
    /// `xⁿ ≥ 0`
    HalfSpace {
        dim: usize,
    },
    /// `0 ≤ xⁿ ≤ 1`
    UnitStrip {
        dim: usize,
    },
    /// `0 ≤ xⁱ ≤ 1` for every i
    UnitBox {
        dim: usize,
    },
    Ball {
        dim: usize,
        radius: f64,
        side: BallSide,
    },
    /// Upper right quadrant of the plane, `x¹ ≥ 0, x² ≥ 0`.
    Quadrant,
}

/// A planar face `x[axis] = offset`; `outward` is the sign of the outward
/// normal along `axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Face {
    pub axis: usize,
    pub offset: f64,
    pub outward: f64,
}

impl Face {
    /// Signed distance, positive on the domain side.
    #[inline]
    pub fn distance(&self, p: &[f64]) -> f64 {
        self.outward * (self.offset - p[self.axis])
    }
}

impl DomainSpec {
    pub fn free_space(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::FreeSpace { dim })
    }

    pub fn half_space(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::HalfSpace { dim })
    }

    pub fn unit_strip(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::UnitStrip { dim })
    }

    pub fn unit_box(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::UnitBox { dim })
    }

    pub fn ball(dim: usize, radius: f64, side: BallSide) -> Result<Self> {
        check_dim(dim)?;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GreenError::InvalidParameter(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Self::Ball { dim, radius, side })
    }

    pub fn dim(&self) -> usize {
        match *self {
            Self::FreeSpace { dim }
            | Self::HalfSpace { dim }
            | Self::UnitStrip { dim }
            | Self::UnitBox { dim }
            | Self::Ball { dim, .. } => dim,
            Self::Quadrant => 2,
        }
    }

    pub(crate) fn faces(&self) -> Vec<Face> {
        match *self {
            Self::HalfSpace { dim } => vec![Face {
                axis: dim - 1,
                offset: 0.0,
                outward: -1.0,
            }],
            Self::UnitStrip { dim } => vec![
                Face {
                    axis: dim - 1,
                    offset: 0.0,
                    outward: -1.0,
                },
                Face {
                    axis: dim - 1,
                    offset: 1.0,
                    outward: 1.0,
                },
            ],
            Self::UnitBox { dim } => (0..dim)
                .flat_map(|axis| {
                    [
                        Face {
                            axis,
                            offset: 0.0,
                            outward: -1.0,
                        },
                        Face {
                            axis,
                            offset: 1.0,
                            outward: 1.0,
                        },
                    ]
                })
                .collect(),
            Self::Quadrant => vec![
                Face {
                    axis: 0,
                    offset: 0.0,
                    outward: -1.0,
                },
                Face {
                    axis: 1,
                    offset: 0.0,
                    outward: -1.0,
                },
            ],
            Self::FreeSpace { .. } | Self::Ball { .. } => Vec::new(),
        }
    }

    pub(crate) fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(GreenError::DimensionMismatch {
                expected: self.dim(),
                got: p.len(),
            });
        }
        Ok(())
    }

    /// Signed clearance: positive inside, negative outside. Equal to the exact
    /// boundary distance for inside points; only the sign is meaningful outside.
    pub(crate) fn clearance(&self, p: &[f64]) -> f64 {
        match *self {
            Self::FreeSpace { .. } => f64::INFINITY,
            Self::Ball { radius, side, .. } => {
                let r = norm(p);
                match side {
                    BallSide::Interior => radius - r,
                    BallSide::Exterior => r - radius,
                }
            }
            _ => self
                .faces()
                .iter()
                .map(|f| f.distance(p))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// True iff `p` lies in the closed region (within [`BOUNDARY_TOL`]).
    pub fn contains(&self, p: &[f64]) -> Result<bool> {
        self.check_point(p)?;
        Ok(self.clearance(p) >= -BOUNDARY_TOL)
    }

    /// Exact Euclidean distance from an inside point to ∂U.
    pub fn distance_to_boundary(&self, p: &[f64]) -> Result<f64> {
        self.check_point(p)?;
        let d = self.clearance(p);
        if d < -BOUNDARY_TOL {
            return Err(GreenError::OutsideDomain(p.to_vec()));
        }
        Ok(d.max(0.0))
    }

    pub fn on_boundary(&self, p: &[f64]) -> Result<bool> {
        self.check_point(p)?;
        Ok(self.clearance(p).abs() <= BOUNDARY_TOL)
    }

    /// Outward unit normal at a boundary point away from corners and edges.
    pub fn boundary_normal(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_point(p)?;
        match *self {
            Self::FreeSpace { .. } => Err(GreenError::NotOnBoundary(p.to_vec())),
            Self::Ball { radius, side, .. } => {
                let r = norm(p);
                if (r - radius).abs() > BOUNDARY_TOL {
                    return Err(GreenError::NotOnBoundary(p.to_vec()));
                }
                let s = match side {
                    BallSide::Interior => 1.0 / r,
                    BallSide::Exterior => -1.0 / r,
                };
                Ok(p.iter().map(|c| c * s).collect())
            }
            _ => {
                if self.clearance(p) < -BOUNDARY_TOL {
                    return Err(GreenError::OutsideDomain(p.to_vec()));
                }
                let active: Vec<Face> = self
                    .faces()
                    .into_iter()
                    .filter(|f| f.distance(p).abs() <= BOUNDARY_TOL)
                    .collect();
                match active.as_slice() {
                    [] => Err(GreenError::NotOnBoundary(p.to_vec())),
                    [face] => {
                        let mut n = vec![0.0; p.len()];
                        n[face.axis] = face.outward;
                        Ok(n)
                    }
                    _ => Err(GreenError::Corner(p.to_vec())),
                }
            }
        }
    }

    /// Closest point of ∂U to an inside point.
    pub fn nearest_boundary_point(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.distance_to_boundary(p)?;
        match *self {
            Self::FreeSpace { .. } => Err(GreenError::Unsupported(
                "free space has no finite boundary".into(),
            )),
            Self::Ball { radius, .. } => {
                let r = norm(p);
                if r == 0.0 {
                    let mut q = vec![0.0; p.len()];
                    q[0] = radius;
                    return Ok(q);
                }
                Ok(p.iter().map(|c| c * radius / r).collect())
            }
            _ => {
                let faces = self.faces();
                let face = faces
                    .iter()
                    .min_by(|a, b| a.distance(p).total_cmp(&b.distance(p)))
                    .expect("planar domains have faces");
                let mut q = p.to_vec();
                q[face.axis] = face.offset;
                Ok(q)
            }
        }
    }

    /// Whether the region is bounded.
    pub fn is_bounded(&self) -> bool {
        matches!(
            self,
            Self::UnitBox { .. }
                | Self::Ball {
                    side: BallSide::Interior,
                    ..
                }
        )
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(GreenError::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    Ok(())
}

pub(crate) fn norm(p: &[f64]) -> f64 {
    p.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::FreeSpace { dim } => write!(f, "free:{dim}"),
            Self::HalfSpace { dim } => write!(f, "halfspace:{dim}"),
            Self::UnitStrip { dim } => write!(f, "strip:{dim}"),
            Self::UnitBox { dim } => write!(f, "box:{dim}"),
            Self::Ball {
                dim,
                radius,
                side: BallSide::Interior,
            } => write!(f, "ball:{dim}:{radius}"),
            Self::Ball {
                dim,
                radius,
                side: BallSide::Exterior,
            } => {
                write!(f, "ball-ext:{dim}:{radius}")
            }
            Self::Quadrant => write!(f, "quadrant"),
        }
    }
}

impl FromStr for DomainSpec {
    type Err = GreenError;

    /// Parses `free:<n>`, `halfspace:<n>`, `strip:<n>`, `box:<n>`,
    /// `ball:<n>:<R>`, `ball-ext:<n>:<R>` or `quadrant`.
    fn from_str(s: &str) -> Result<Self> {
        let fail = |reason: &str| GreenError::Parse {
            input: s.to_string(),
            reason: reason.into(),
        };
        let parts: Vec<&str> = s.trim().split(':').collect();
        let dim_of = |t: &str| -> Result<usize> {
            t.parse::<usize>()
                .map_err(|_| fail("dimension must be a positive integer"))
        };
        match parts.as_slice() {
            ["quadrant"] => Ok(Self::Quadrant),
            ["free", n] => Self::free_space(dim_of(n)?),
            ["halfspace", n] => Self::half_space(dim_of(n)?),
            ["strip", n] => Self::unit_strip(dim_of(n)?),
            ["box", n] => Self::unit_box(dim_of(n)?),
            [kind @ ("ball" | "ball-ext"), n, r] => {
                let radius: f64 = r.parse().map_err(|_| fail("radius must be a number"))?;
                let side = if *kind == "ball" { BallSide::Interior } else { BallSide::Exterior };
                Self::ball(dim_of(n)?, radius, side)
            }
            _ => Err(fail(
                "expected free:<n>, halfspace:<n>, strip:<n>, box:<n>, ball:<n>:<R>, ball-ext:<n>:<R> or quadrant",
            )),
        }
    }
}
