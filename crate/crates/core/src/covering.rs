//! Image expansions for the planar domains.
//!
//! The half-space, unit strip and unit box are quotients of ℝⁿ by groups
//! generated by reflections and translations. A domain kernel is the signed
//! sum of free kernels centred on the images of the source point, with a ±1
//! weight per image fixed by the boundary condition.
//!
//! Strip images sit at `±x + 2m` along the last axis; the box takes the same
//! lattice on every axis. Terms are ordered by shell `|m|`, so the list for
//! order `M` is always a prefix of the list for `M + 1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{GreenError, Result};
use crate::geometry::{DomainSpec, Point};

/// Boundary condition, equivalently the ±1 representation of the image group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Dirichlet,
    Neumann,
}

impl Representation {
    /// Effective kernel weight of an image with the given reflection parity.
    pub fn weight(self, odd_reflections: bool) -> f64 {
        match (self, odd_reflections) {
            (Self::Dirichlet, true) => -1.0,
            _ => 1.0,
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dirichlet => "dirichlet",
            Self::Neumann => "neumann",
        })
    }
}

impl FromStr for Representation {
    type Err = GreenError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dirichlet" | "d" => Ok(Self::Dirichlet),
            "neumann" | "n" => Ok(Self::Neumann),
            _ => Err(GreenError::Parse {
                input: s.to_string(),
                reason: "expected dirichlet or neumann".into(),
            }),
        }
    }
}

/// `x ↦ sign·x + 2·shift` on one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisMap {
    pub axis: usize,
    pub reflected: bool,
    pub shift: i64,
}

impl AxisMap {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        let s = if self.reflected { -x } else { x };
        s + 2.0 * self.shift as f64
    }

    fn shell(&self) -> u64 {
        self.shift.unsigned_abs()
    }
}

/// A group element: per-axis reflections and even translations. Axes not
/// listed are left unchanged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageGroupElement {
    pub maps: Vec<AxisMap>,
}

impl ImageGroupElement {
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let mut q = p.to_vec();
        for m in &self.maps {
            q[m.axis] = m.apply(p[m.axis]);
        }
        q
    }

    pub fn odd_reflections(&self) -> bool {
        self.maps.iter().filter(|m| m.reflected).count() % 2 == 1
    }

    pub fn is_identity(&self) -> bool {
        self.maps.iter().all(|m| !m.reflected && m.shift == 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageTerm {
    pub element: ImageGroupElement,
    pub image: Point,
    pub weight_dirichlet: f64,
    pub weight_neumann: f64,
}

impl ImageTerm {
    pub fn weight(&self, bc: Representation) -> f64 {
        match bc {
            Representation::Dirichlet => self.weight_dirichlet,
            Representation::Neumann => self.weight_neumann,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageExpansion {
    pub terms: Vec<ImageTerm>,
    pub truncation_order: usize,
    /// Bound on the omitted terms, present when the order was chosen for a
    /// specific scale and tolerance.
    pub tail_bound: Option<f64>,
}

/// Scale that governs how fast image contributions decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationScale {
    /// Heat kernel with elapsed time τ.
    Heat { tau: f64 },
    /// Elliptic kernel at the given source–target distance.
    Elliptic { distance: f64 },
}

/// Per-axis image maps for one strip axis in shell order:
/// `+x, −x`, then `x+2k, x−2k, −x+2k, −x−2k` for k = 1..=M.
fn axis_maps(axis: usize, order: usize) -> Vec<AxisMap> {
    let mut v = vec![
        AxisMap {
            axis,
            reflected: false,
            shift: 0,
        },
        AxisMap {
            axis,
            reflected: true,
            shift: 0,
        },
    ];
    for k in 1..=order as i64 {
        for (reflected, shift) in [(false, k), (false, -k), (true, k), (true, -k)] {
            v.push(AxisMap {
                axis,
                reflected,
                shift,
            });
        }
    }
    v
}

fn make_term(element: ImageGroupElement, p: &[f64]) -> ImageTerm {
    let odd = element.odd_reflections();
    ImageTerm {
        image: Point::from(element.apply(p).as_slice()),
        weight_dirichlet: Representation::Dirichlet.weight(odd),
        weight_neumann: Representation::Neumann.weight(odd),
        element,
    }
}

/// Images of `p` under the covering group, truncated at shell `order`.
pub fn enumerate_images(domain: &DomainSpec, p: &[f64], order: usize) -> Result<ImageExpansion> {
    if !domain.contains(p)? {
        return Err(GreenError::OutsideDomain(p.to_vec()));
    }
    let terms = match *domain {
        DomainSpec::HalfSpace { dim } => axis_maps(dim - 1, 0)
            .into_iter()
            .map(|m| make_term(ImageGroupElement { maps: vec![m] }, p))
            .collect(),
        DomainSpec::UnitStrip { dim } => axis_maps(dim - 1, order)
            .into_iter()
            .map(|m| make_term(ImageGroupElement { maps: vec![m] }, p))
            .collect(),
        DomainSpec::UnitBox { dim } => {
            let per_axis = axis_maps(0, order).len();
            let total = per_axis
                .checked_pow(dim as u32)
                .filter(|&t| t <= 50_000_000)
                .ok_or_else(|| {
                    GreenError::InvalidParameter(format!(
                        "box image count too large at order {order}"
                    ))
                })?;
            let lists: Vec<Vec<AxisMap>> = (0..dim).map(|a| axis_maps(a, order)).collect();
            let mut elements: Vec<(u64, ImageGroupElement)> = Vec::with_capacity(total);
            let mut idx = vec![0usize; dim];
            for _ in 0..total {
                let maps: Vec<AxisMap> =
                    idx.iter().enumerate().map(|(a, &i)| lists[a][i]).collect();
                let shell = maps.iter().map(AxisMap::shell).max().unwrap_or(0);
                elements.push((shell, ImageGroupElement { maps }));
                for d in (0..dim).rev() {
                    idx[d] += 1;
                    if idx[d] < per_axis {
                        break;
                    }
                    idx[d] = 0;
                }
            }
            // Stable: within a shell the lexicographic order does not depend on M.
            elements.sort_by_key(|(s, _)| *s);
            elements.into_iter().map(|(_, e)| make_term(e, p)).collect()
        }
        _ => {
            return Err(GreenError::Unsupported(format!(
                "image expansion is defined for halfspace, strip and box, not {domain}"
            )))
        }
    };
    let truncation_order = if matches!(domain, DomainSpec::HalfSpace { .. }) {
        0
    } else {
        order
    };
    Ok(ImageExpansion {
        terms,
        truncation_order,
        tail_bound: None,
    })
}

/// Images with the order chosen by [`truncation_order`] for the given scale.
pub fn enumerate_images_for(
    domain: &DomainSpec,
    p: &[f64],
    scale: TruncationScale,
    tol: f64,
) -> Result<ImageExpansion> {
    let m = truncation_order(domain, scale, tol)?;
    let mut exp = enumerate_images(domain, p, m)?;
    exp.tail_bound = Some(tail_bound(domain, scale, m)?);
    Ok(exp)
}

/// Sum of the omitted one-axis Gaussian factors `exp(−π d²/τ)` beyond shell M,
/// for source and target both in [0, 1]. Every omitted image is at distance
/// at least 2(k−1) ≥ 2M, four per shell.
pub fn heat_axis_tail(tau: f64, m: usize) -> f64 {
    if m == 0 {
        return f64::INFINITY;
    }
    let m = m as f64;
    let lead = (-4.0 * std::f64::consts::PI * m * m / tau).exp();
    let ratio = (-8.0 * std::f64::consts::PI * m / tau).exp();
    4.0 * lead / (1.0 - ratio)
}

/// Bound on the full one-axis image sum of Gaussian factors.
pub fn heat_axis_total(tau: f64) -> f64 {
    2.0 + tau.sqrt()
}

/// `c_n (n−2)(n−1)`, a bound on the second transverse derivative of the free
/// elliptic kernel times `|z|ⁿ`.
fn elliptic_second_derivative_constant(n: usize) -> f64 {
    match n {
        1 => 0.0,
        2 => 2.0,
        _ => {
            let nf = n as f64;
            let c = std::f64::consts::PI.powf(1.0 - nf / 2.0) * gamma(nf / 2.0 - 1.0);
            c * (nf - 2.0) * (nf - 1.0)
        }
    }
}

/// Tail bound for the strip elliptic image sum grouped by shell ±m.
/// Each grouped shell k is bounded by `4 xy B_n (2k−2)^{−n}` with `xy ≤ 1`.
pub fn elliptic_strip_tail(n: usize, m: usize) -> f64 {
    if m < 2 {
        return f64::INFINITY;
    }
    let b = elliptic_second_derivative_constant(n);
    if b == 0.0 {
        return 0.0;
    }
    let nf = n as f64;
    4.0 * b * (2.0 * m as f64 - 2.0).powf(1.0 - nf) / (2.0 * (nf - 1.0))
}

fn tail_bound(domain: &DomainSpec, scale: TruncationScale, m: usize) -> Result<f64> {
    match (*domain, scale) {
        (DomainSpec::HalfSpace { .. }, _) => Ok(0.0),
        (DomainSpec::UnitStrip { .. }, TruncationScale::Heat { tau }) => Ok(heat_axis_tail(tau, m)),
        (DomainSpec::UnitBox { dim }, TruncationScale::Heat { tau }) => {
            Ok(dim as f64 * heat_axis_tail(tau, m) * heat_axis_total(tau).powi(dim as i32 - 1))
        }
        (DomainSpec::UnitStrip { dim }, TruncationScale::Elliptic { .. }) => {
            Ok(elliptic_strip_tail(dim, m))
        }
        (DomainSpec::UnitBox { .. }, TruncationScale::Elliptic { .. }) => {
            Err(GreenError::Unsupported(
                "elliptic box kernels are not evaluated by a truncated image sum".into(),
            ))
        }
        _ => Err(GreenError::Unsupported(format!(
            "no image expansion for {domain}"
        ))),
    }
}

/// Smallest order whose certified tail bound is below `tol`.
pub fn truncation_order(domain: &DomainSpec, scale: TruncationScale, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(GreenError::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    match scale {
        TruncationScale::Heat { tau } if !(tau > 0.0) => {
            return Err(GreenError::InvalidParameter(format!(
                "heat scale must be positive, got {tau}"
            )))
        }
        TruncationScale::Elliptic { distance } if !(distance > 0.0) => {
            return Err(GreenError::InvalidParameter(format!(
                "elliptic scale must be positive, got {distance}"
            )))
        }
        _ => {}
    }
    if matches!(domain, DomainSpec::HalfSpace { .. }) {
        return Ok(0);
    }
    // Bounds are monotone in M: bracket then bisect.
    let mut hi = 1usize;
    while tail_bound(domain, scale, hi)? >= tol {
        hi *= 2;
        if hi > 1 << 40 {
            return Err(GreenError::InvalidParameter(format!(
                "tolerance {tol} is unreachable"
            )));
        }
    }
    let mut lo = hi / 2;
    if lo == 0 {
        return Ok(hi);
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if tail_bound(domain, scale, mid)? < tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_space_two_terms() {
        let d = DomainSpec::half_space(1).unwrap();
        for m in [0, 3] {
            let e = enumerate_images(&d, &[0.3], m).unwrap();
            assert_eq!(e.terms.len(), 2);
            assert_eq!(e.terms[0].image.coords(), &[0.3]);
            assert_eq!(
                (e.terms[0].weight_dirichlet, e.terms[0].weight_neumann),
                (1.0, 1.0)
            );
            assert_eq!(e.terms[1].image.coords(), &[-0.3]);
            assert_eq!(
                (e.terms[1].weight_dirichlet, e.terms[1].weight_neumann),
                (-1.0, 1.0)
            );
        }
    }

    #[test]
    fn strip_order_one() {
        let d = DomainSpec::unit_strip(1).unwrap();
        let e = enumerate_images(&d, &[0.3], 1).unwrap();
        assert_eq!(e.terms.len(), 6);
        let mut got: Vec<(f64, f64)> = e
            .terms
            .iter()
            .map(|t| (t.image[0], t.weight_dirichlet))
            .collect();
        got.sort_by(|a, b| a.0.total_cmp(&b.0));
        let want = [
            (-2.3, -1.0),
            (-1.7, 1.0),
            (-0.3, -1.0),
            (0.3, 1.0),
            (1.7, -1.0),
            (2.3, 1.0),
        ];
        for (g, w) in got.iter().zip(want) {
            assert!((g.0 - w.0).abs() < 1e-15);
            assert_eq!(g.1, w.1);
        }
    }

    #[test]
    fn box_order_zero() {
        let d = DomainSpec::unit_box(2).unwrap();
        let e = enumerate_images(&d, &[0.3, 0.5], 0).unwrap();
        let got: Vec<(Vec<f64>, f64)> = e
            .terms
            .iter()
            .map(|t| (t.image.coords().to_vec(), t.weight_dirichlet))
            .collect();
        assert_eq!(
            got,
            vec![
                (vec![0.3, 0.5], 1.0),
                (vec![0.3, -0.5], -1.0),
                (vec![-0.3, 0.5], -1.0),
                (vec![-0.3, -0.5], 1.0),
            ]
        );
    }

    #[test]
    fn box_counts_and_prefix() {
        let d = DomainSpec::unit_box(3).unwrap();
        let p = [0.2, 0.7, 0.4];
        let e1 = enumerate_images(&d, &p, 1).unwrap();
        let e2 = enumerate_images(&d, &p, 2).unwrap();
        assert_eq!(e1.terms.len(), 216);
        assert_eq!(e2.terms.len(), 1000);
        assert_eq!(&e2.terms[..216], &e1.terms[..]);
        assert!(e1.terms[0].element.is_identity());
    }

    #[test]
    fn unsupported_domains() {
        let ball = DomainSpec::ball(3, 1.0, crate::geometry::BallSide::Interior).unwrap();
        assert!(matches!(
            enumerate_images(&ball, &[0.0; 3], 1),
            Err(GreenError::Unsupported(_))
        ));
        let hs = DomainSpec::half_space(1).unwrap();
        assert!(matches!(
            enumerate_images(&hs, &[-1.0], 1),
            Err(GreenError::OutsideDomain(_))
        ));
    }

    #[test]
    fn heat_truncation_example() {
        let strip = DomainSpec::unit_strip(1).unwrap();
        let m = truncation_order(&strip, TruncationScale::Heat { tau: 1.0 }, 1e-12).unwrap();
        assert_eq!(m, 2);
        // Independent majorant: direct sum of 4·exp(−4πj²) for j ≥ M.
        let direct = |m: usize| -> f64 {
            (m..m + 50)
                .map(|j| 4.0 * (-4.0 * std::f64::consts::PI * (j * j) as f64).exp())
                .sum()
        };
        assert!(direct(1) > 1e-12);
        assert!(direct(2) < 1e-12);
        for tau in [1e-3, 1e-2] {
            let m = truncation_order(&strip, TruncationScale::Heat { tau }, 1e-12).unwrap();
            assert!(m <= 1);
        }
        assert!(matches!(
            truncation_order(&strip, TruncationScale::Heat { tau: 1.0 }, 0.0),
            Err(GreenError::InvalidParameter(_))
        ));
    }

    #[test]
    fn elliptic_truncation_is_minimal() {
        let strip = DomainSpec::unit_strip(3).unwrap();
        let scale = TruncationScale::Elliptic { distance: 0.5 };
        let m = truncation_order(&strip, scale, 1e-8).unwrap();
        assert!(elliptic_strip_tail(3, m) < 1e-8);
        assert!(elliptic_strip_tail(3, m - 1) >= 1e-8);
        assert!((7000..7100).contains(&m));
    }

    #[test]
    fn representation_parsing() {
        assert_eq!(
            "Dirichlet".parse::<Representation>().unwrap(),
            Representation::Dirichlet
        );
        assert_eq!(
            "n".parse::<Representation>().unwrap(),
            Representation::Neumann
        );
        assert!("robin".parse::<Representation>().is_err());
    }
}
