//! Elementary (Green) kernels on bounded and half-bounded domains.

use std::f64::consts::PI;

use statrs::function::gamma::{gamma, gamma_lr};

use super::free::{free_elliptic, free_heat_real};
use crate::covering::{truncation_order, Representation, TruncationScale};
use crate::error::{GreenError, Result};
use crate::geometry::{dist, dot, BallSide, DomainSpec, BOUNDARY_TOL};
use crate::quadrature::{integrate_log_scale, Tolerance};

/// Beyond this τ the strip eigen-expansion is converged to below 1e-20.
const TAU_CUTOFF: f64 = 60.0;

/// One bounded axis of the heat kernel on [0, 1]:
/// `τ^{−1/2} Σ_m [g(y − x − 2m) ± g(y + x − 2m)]`, `g(u) = e^{−πu²/τ}`.
///
/// Small τ uses the image sum, large τ the equivalent eigen-expansion
/// `Σ_k e^{−πk²τ/4}·(2 sin kπx sin kπy | 2 cos kπx cos kπy)` (plus 1 for
/// Neumann).
pub fn strip_theta(bc: Representation, x: f64, y: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    if tau <= 2.0 {
        let w = bc.weight(true);
        let mut s = 0.0;
        for m in -3i32..=3 {
            let sh = 2.0 * m as f64;
            let a = y - x - sh;
            let b = y + x - sh;
            s += (-PI * a * a / tau).exp() + w * (-PI * b * b / tau).exp();
        }
        s / tau.sqrt()
    } else {
        let mut s = match bc {
            Representation::Dirichlet => 0.0,
            Representation::Neumann => 1.0,
        };
        for k in 1..=10 {
            let kf = k as f64;
            let damp = (-PI * kf * kf * tau / 4.0).exp();
            let modes = match bc {
                Representation::Dirichlet => (kf * PI * x).sin() * (kf * PI * y).sin(),
                Representation::Neumann => (kf * PI * x).cos() * (kf * PI * y).cos(),
            };
            s += 2.0 * modes * damp;
        }
        s
    }
}

/// One bounded axis of the image sum truncated at shell `order`.
fn axis_image_sum(bc: Representation, x: f64, y: f64, tau: f64, order: usize) -> f64 {
    let w = bc.weight(true);
    let mut s = 0.0;
    let m = order as i64;
    for k in -m..=m {
        let sh = 2.0 * k as f64;
        let a = y - x - sh;
        let b = y - (-x + sh);
        s += (-PI * a * a / tau).exp() + w * (-PI * b * b / tau).exp();
    }
    s / tau.sqrt()
}

fn check_pair(domain: &DomainSpec, x: &[f64], y: &[f64]) -> Result<()> {
    for p in [x, y] {
        if !domain.contains(p)? {
            return Err(GreenError::OutsideDomain(p.to_vec()));
        }
    }
    Ok(())
}

/// Heat kernel of a planar domain by images, truncated so that the omitted
/// terms are below `tol` in absolute value. Zero for `Δt ≤ 0`.
///
/// Serves both as the parabolic elementary kernel (Δt = elapsed time) and
/// as the Cauchy kernel (Δt = evaluation time).
pub fn heat_domain_kernel(
    domain: &DomainSpec,
    bc: Representation,
    x: &[f64],
    dt: f64,
    xp: &[f64],
    tol: f64,
) -> Result<f64> {
    check_pair(domain, x, xp)?;
    if !(tol > 0.0) {
        return Err(GreenError::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if dt <= 0.0 {
        return Ok(0.0);
    }
    let n = x.len();
    match *domain {
        DomainSpec::FreeSpace { .. } => {
            let r = dist(x, xp);
            Ok(free_heat_real(n, r * r, dt))
        }
        DomainSpec::HalfSpace { .. } => {
            let free2: f64 = (0..n - 1).map(|i| (x[i] - xp[i]).powi(2)).sum();
            let axis = axis_image_sum(bc, x[n - 1], xp[n - 1], dt, 0);
            Ok(free_pre(n - 1, dt, free2) * axis)
        }
        DomainSpec::UnitStrip { .. } | DomainSpec::UnitBox { .. } => {
            let tol_eff = (tol * dt.powf(n as f64 / 2.0)).max(f64::MIN_POSITIVE);
            let order = truncation_order(domain, TruncationScale::Heat { tau: dt }, tol_eff)?;
            let bounded_from = if matches!(domain, DomainSpec::UnitBox { .. }) {
                0
            } else {
                n - 1
            };
            let free2: f64 = (0..bounded_from).map(|i| (x[i] - xp[i]).powi(2)).sum();
            let mut k = free_pre(bounded_from, dt, free2);
            for i in bounded_from..n {
                k *= axis_image_sum(bc, x[i], xp[i], dt, order);
            }
            Ok(k)
        }
        _ => Err(GreenError::Unsupported(format!(
            "no heat kernel for {domain}"
        ))),
    }
}

/// Free-axis factor `τ^{−m/2} e^{−π d²/τ}`; 1 when there are no free axes.
fn free_pre(m: usize, tau: f64, d2: f64) -> f64 {
    if m == 0 {
        1.0
    } else {
        free_heat_real(m, d2, tau)
    }
}

/// Dirichlet Green function of the 3-ball of radius R (also valid outside).
pub fn ball_green_3d(radius: f64, x: &[f64], y: &[f64]) -> f64 {
    let x2 = dot(x, x);
    let y2 = dot(y, y);
    let mirror = (x2 * y2 / (radius * radius) - 2.0 * dot(x, y) + radius * radius).sqrt();
    1.0 / dist(x, y) - 1.0 / mirror
}

/// Dirichlet Green function of the quadrant, four logarithms.
pub fn quadrant_green(x: &[f64], y: &[f64]) -> f64 {
    let l = |a: f64, b: f64| 0.5 * (a * a + b * b).ln();
    -2.0 * (l(y[0] - x[0], y[1] - x[1]) - l(y[0] + x[0], y[1] - x[1]) - l(y[0] - x[0], y[1] + x[1])
        + l(y[0] + x[0], y[1] + x[1]))
}

/// Dirichlet strip Green function by the direct image sum over shells
/// `|m| ≤ order`, each shell grouping `±m` so the series converges absolutely.
pub fn strip_green_paired_images(n: usize, x: &[f64], y: &[f64], order: usize) -> Result<f64> {
    if x.len() != n || y.len() != n {
        return Err(GreenError::DimensionMismatch {
            expected: n,
            got: x.len().min(y.len()),
        });
    }
    let free2: f64 = (0..n - 1).map(|i| (x[i] - y[i]).powi(2)).sum();
    let g = |z: f64| free_elliptic(n, (free2 + z * z).sqrt());
    let (xn, yn) = (x[n - 1], y[n - 1]);
    let shell = |m: i64| -> Result<f64> {
        let sh = 2.0 * m as f64;
        Ok(g(yn - xn - sh)? - g(yn - (-xn + sh))?)
    };
    let mut total = 0.0;
    for m in (1..=order as i64).rev() {
        total += shell(m)? + shell(-m)?;
    }
    Ok(total + shell(0)?)
}

/// Strip/box Green function as `∫₀^∞ K(x, y; τ) dτ` with the factorized heat
/// kernel. The τ-integral converges absolutely, unlike the image series.
pub(crate) fn green_by_heat_integral(
    domain: &DomainSpec,
    bc: Representation,
    x: &[f64],
    y: &[f64],
    tol: f64,
) -> Result<f64> {
    let n = x.len();
    let bounded_from = match domain {
        DomainSpec::UnitBox { .. } => 0,
        _ => n - 1,
    };
    let nfree = bounded_from;
    if bc == Representation::Neumann {
        if matches!(domain, DomainSpec::UnitBox { .. }) {
            return Err(GreenError::Unsupported(
                "the Neumann Green function of the box does not exist (zero mode)".into(),
            ));
        }
        if n < 4 {
            return Err(GreenError::Divergent(format!(
                "the Neumann strip Green function needs n ≥ 4, got {n}"
            )));
        }
    }
    let free2: f64 = (0..nfree).map(|i| (x[i] - y[i]).powi(2)).sum();
    let r2 = dist(x, y).powi(2);
    let integrand = |tau: f64| {
        let mut k = free_pre(nfree, tau, free2);
        for i in bounded_from..n {
            if k == 0.0 {
                break;
            }
            k *= strip_theta(bc, x[i], y[i], tau);
        }
        k
    };
    let s_lo = (PI * r2 / 745.0).ln();
    let res = integrate_log_scale(integrand, s_lo, TAU_CUTOFF.ln(), Tolerance::new(tol, 1e-14));
    let mut value = res.ok_within(tol.max(1e-12 * res.value.abs()))?;
    if bc == Representation::Neumann {
        // Beyond the cutoff the bounded axis contributes exactly its zero mode.
        let p = (n as f64 - 1.0) / 2.0;
        let c = PI * free2;
        value += if c == 0.0 {
            TAU_CUTOFF.powf(1.0 - p) / (p - 1.0)
        } else {
            c.powf(1.0 - p) * gamma(p - 1.0) * gamma_lr(p - 1.0, c / TAU_CUTOFF)
        };
    }
    Ok(value)
}

/// Elliptic elementary kernel (Green function) of a canonical domain.
///
/// Dirichlet kernels are exactly zero when either argument lies on the
/// boundary. Ball kernels exist for `n = 3` only; ball and quadrant kernels
/// are Dirichlet only.
pub fn domain_green(
    domain: &DomainSpec,
    bc: Representation,
    x: &[f64],
    xp: &[f64],
    tol: f64,
) -> Result<f64> {
    check_pair(domain, x, xp)?;
    if !(tol > 0.0) {
        return Err(GreenError::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if dist(x, xp) == 0.0 {
        return Err(GreenError::Singular(
            "Green function on the diagonal".into(),
        ));
    }
    if bc == Representation::Dirichlet
        && !matches!(domain, DomainSpec::FreeSpace { .. })
        && (domain.clearance(x).abs() <= BOUNDARY_TOL || domain.clearance(xp).abs() <= BOUNDARY_TOL)
    {
        return Ok(0.0);
    }
    let n = x.len();
    match *domain {
        DomainSpec::FreeSpace { .. } => free_elliptic(n, dist(x, xp)),
        DomainSpec::HalfSpace { .. } => {
            let mut xr = x.to_vec();
            xr[n - 1] = -x[n - 1];
            Ok(free_elliptic(n, dist(x, xp))? + bc.weight(true) * free_elliptic(n, dist(&xr, xp))?)
        }
        DomainSpec::UnitStrip { .. } | DomainSpec::UnitBox { .. } => {
            green_by_heat_integral(domain, bc, x, xp, tol)
        }
        DomainSpec::Ball {
            dim: 3,
            radius,
            side: BallSide::Interior,
        } if bc == Representation::Dirichlet => Ok(ball_green_3d(radius, x, xp)),
        DomainSpec::Ball { .. } => Err(GreenError::Unsupported(
            "ball Green functions are available for the interior 3-ball with Dirichlet data".into(),
        )),
        DomainSpec::Quadrant if bc == Representation::Dirichlet => Ok(quadrant_green(x, xp)),
        DomainSpec::Quadrant => Err(GreenError::Unsupported(
            "the quadrant Green function is Dirichlet only".into(),
        )),
    }
}
