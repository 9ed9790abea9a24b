//! Monte Carlo sampling of the diffusion with generator `(1/4π)Δ`.
//!
//! Every walk draws from its own ChaCha stream keyed by `(seed, walk index)`,
//! and walks are reduced in fixed blocks in index order, so results do not
//! depend on how many worker threads run them.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::covering::Representation;
use crate::error::{GreenError, Result};
use crate::field::ScalarField;
use crate::geometry::{norm, BallSide, DomainSpec, Face, Point, SpaceTimePoint, BOUNDARY_TOL};
use crate::problem::{BoundaryValueProblem, PdeClass};

/// Walks per reduction block.
const BLOCK: usize = 256;
/// Iteration cap for walk-on-spheres.
const WOS_MAX_JUMPS: usize = 1_000_000;
/// Bridge crossing probabilities below e^{−40} are not drawn.
const BRIDGE_CUTOFF: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkConfig {
    /// Euler–Maruyama time step.
    pub step_dt: f64,
    /// Walk-on-spheres absorption distance.
    pub eps_shell: f64,
    pub max_steps: usize,
}

impl WalkConfig {
    pub fn new(step_dt: f64, eps_shell: f64, max_steps: usize) -> Result<Self> {
        if !(step_dt > 0.0 && step_dt.is_finite()) {
            return Err(GreenError::InvalidParameter(format!(
                "step_dt must be positive, got {step_dt}"
            )));
        }
        if !(eps_shell > 0.0 && eps_shell.is_finite()) {
            return Err(GreenError::InvalidParameter(format!(
                "eps_shell must be positive, got {eps_shell}"
            )));
        }
        if max_steps == 0 {
            return Err(GreenError::InvalidParameter(
                "max_steps must be at least 1".into(),
            ));
        }
        Ok(Self {
            step_dt,
            eps_shell,
            max_steps,
        })
    }
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            step_dt: 1e-4,
            eps_shell: 1e-4,
            max_steps: 100_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitRecord {
    pub exit_point: Point,
    pub exit_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over `√n`.
    pub stderr: f64,
    #[serde(rename = "n")]
    pub n_samples: usize,
    pub seed: u64,
}

/// The random stream of walk `index`.
pub fn walk_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

enum WalkEnd {
    Exit { point: Vec<f64>, time: f64 },
    Survived { point: Vec<f64> },
}

/// The walls a step might cross, fixed for the walk: planar faces, or a
/// sphere treated through its tangent plane.
enum Walls {
    Planar(Vec<Face>),
    Sphere { radius: f64, interior: bool },
    Open,
}

impl Walls {
    fn of(domain: &DomainSpec) -> Self {
        match *domain {
            DomainSpec::FreeSpace { .. } => Self::Open,
            DomainSpec::Ball { radius, side, .. } => Self::Sphere {
                radius,
                interior: side == BallSide::Interior,
            },
            _ => Self::Planar(domain.faces()),
        }
    }

    fn count(&self) -> usize {
        match self {
            Self::Open => 0,
            Self::Sphere { .. } => 1,
            Self::Planar(faces) => faces.len(),
        }
    }

    /// Per-wall distances into `out`; returns the smallest (the clearance).
    #[inline]
    fn distances(&self, p: &[f64], out: &mut [f64]) -> f64 {
        match self {
            Self::Open => f64::INFINITY,
            Self::Sphere { radius, interior } => {
                let d = if *interior {
                    radius - norm(p)
                } else {
                    norm(p) - radius
                };
                out[0] = d;
                d
            }
            Self::Planar(faces) => {
                let mut m = f64::INFINITY;
                for (f, o) in faces.iter().zip(out.iter_mut()) {
                    let d = f.distance(p);
                    m = m.min(d);
                    *o = d;
                }
                m
            }
        }
    }
}

/// Euler–Maruyama walk from `start`, stopped at the first boundary crossing
/// or at `horizon`. `visit(x, s, h)` is called at the left end of each step.
fn em_walk<R: Rng>(
    domain: &DomainSpec,
    start: &[f64],
    cfg: &WalkConfig,
    rng: &mut R,
    horizon: Option<f64>,
    mut visit: impl FnMut(&[f64], f64, f64),
) -> Result<WalkEnd> {
    let n = start.len();
    let walls = Walls::of(domain);
    let mut x = start.to_vec();
    let mut y = vec![0.0; n];
    let mut time = 0.0;
    let (mut da, mut db) = (vec![0.0; walls.count()], vec![0.0; walls.count()]);
    let mut cx = walls.distances(&x, &mut da);
    let full_sigma = (cfg.step_dt / (2.0 * PI)).sqrt();
    for _ in 0..cfg.max_steps {
        let mut h = cfg.step_dt;
        let mut sigma = full_sigma;
        if let Some(t) = horizon {
            if t - time < h {
                h = t - time;
                if h <= 0.0 {
                    return Ok(WalkEnd::Survived { point: x });
                }
                sigma = (h / (2.0 * PI)).sqrt();
            }
        }
        visit(&x, time, h);
        for i in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            y[i] = x[i] + sigma * z;
        }
        let cy = walls.distances(&y, &mut db);
        if cy <= 0.0 {
            let frac = (cx / (cx - cy)).clamp(0.0, 1.0);
            let p: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + frac * (b - a)).collect();
            return Ok(WalkEnd::Exit {
                point: domain.nearest_boundary_point(&p)?,
                time: time + frac * h,
            });
        }
        let cut = BRIDGE_CUTOFF * h / (4.0 * PI);
        for (a, b) in da.iter().zip(&db) {
            if a * b < cut && rng.random::<f64>() < (-4.0 * PI * a * b / h).exp() {
                let p: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
                return Ok(WalkEnd::Exit {
                    point: domain.nearest_boundary_point(&p)?,
                    time: time + 0.5 * h,
                });
            }
        }
        std::mem::swap(&mut x, &mut y);
        std::mem::swap(&mut da, &mut db);
        cx = cy;
        time += h;
    }
    Err(GreenError::MaxStepsExceeded(cfg.max_steps))
}

fn interior_start(domain: &DomainSpec, start: &[f64]) -> Result<bool> {
    domain.check_point(start)?;
    let c = domain.clearance(start);
    if c < -BOUNDARY_TOL {
        return Err(GreenError::OutsideDomain(start.to_vec()));
    }
    Ok(c > BOUNDARY_TOL)
}

fn em_exit<R: Rng>(
    domain: &DomainSpec,
    start: &[f64],
    cfg: &WalkConfig,
    rng: &mut R,
) -> Result<ExitRecord> {
    if !interior_start(domain, start)? {
        return Ok(ExitRecord {
            exit_point: Point::from(start),
            exit_time: 0.0,
        });
    }
    match em_walk(domain, start, cfg, rng, None, |_, _, _| {})? {
        WalkEnd::Exit { point, time } => Ok(ExitRecord {
            exit_point: Point::from(&point[..]),
            exit_time: time,
        }),
        WalkEnd::Survived { .. } => unreachable!("walks without a horizon end by exiting"),
    }
}

/// First exit of one Euler–Maruyama walk (stream 0 of `seed`).
pub fn sample_exit_em(
    domain: &DomainSpec,
    start: &Point,
    cfg: &WalkConfig,
    seed: u64,
) -> Result<ExitRecord> {
    em_exit(domain, start, cfg, &mut walk_rng(seed, 0))
}

fn unit_direction<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let l = norm(&v);
        if l > 1e-12 {
            return v.into_iter().map(|c| c / l).collect();
        }
    }
}

fn wos_exit<R: Rng>(domain: &DomainSpec, start: &[f64], eps: f64, rng: &mut R) -> Result<Point> {
    if !interior_start(domain, start)? {
        return Ok(Point::from(start));
    }
    if matches!(domain, DomainSpec::FreeSpace { .. }) {
        return Err(GreenError::Unsupported(
            "free space has no boundary to reach".into(),
        ));
    }
    let mut x = start.to_vec();
    for _ in 0..WOS_MAX_JUMPS {
        let d = domain.distance_to_boundary(&x)?;
        if d <= eps {
            return Ok(Point::from(&domain.nearest_boundary_point(&x)?[..]));
        }
        let w = unit_direction(rng, x.len());
        for (c, wi) in x.iter_mut().zip(&w) {
            *c += d * wi;
        }
    }
    Err(GreenError::MaxStepsExceeded(WOS_MAX_JUMPS))
}

/// Exit point of one walk-on-spheres walk (stream 0 of `seed`); the exit
/// time is not tracked.
pub fn sample_exit_wos(
    domain: &DomainSpec,
    start: &Point,
    eps_shell: f64,
    seed: u64,
) -> Result<Point> {
    if !(eps_shell > 0.0) {
        return Err(GreenError::InvalidParameter(format!(
            "eps_shell must be positive, got {eps_shell}"
        )));
    }
    wos_exit(domain, start, eps_shell, &mut walk_rng(seed, 0))
}

/// Exit records of walks `0..n` in index order.
pub fn sample_exits_em(
    domain: &DomainSpec,
    start: &Point,
    n_walks: usize,
    cfg: &WalkConfig,
    seed: u64,
) -> Result<Vec<ExitRecord>> {
    (0..n_walks as u64)
        .into_par_iter()
        .map(|i| em_exit(domain, start, cfg, &mut walk_rng(seed, i)))
        .collect()
}

/// As [`sample_exits_em`], with walks still inside at `horizon` reported
/// as `None`.
pub fn sample_exits_em_censored(
    domain: &DomainSpec,
    start: &Point,
    n_walks: usize,
    cfg: &WalkConfig,
    seed: u64,
    horizon: f64,
) -> Result<Vec<Option<ExitRecord>>> {
    if !(horizon > 0.0) {
        return Err(GreenError::InvalidParameter(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if !interior_start(domain, start)? {
        let rec = ExitRecord {
            exit_point: start.clone(),
            exit_time: 0.0,
        };
        return Ok(vec![Some(rec); n_walks]);
    }
    (0..n_walks as u64)
        .into_par_iter()
        .map(|i| {
            let end = em_walk(
                domain,
                start,
                cfg,
                &mut walk_rng(seed, i),
                Some(horizon),
                |_, _, _| {},
            )?;
            Ok(match end {
                WalkEnd::Exit { point, time } => Some(ExitRecord {
                    exit_point: Point::from(&point[..]),
                    exit_time: time,
                }),
                WalkEnd::Survived { .. } => None,
            })
        })
        .collect()
}

/// Walk-on-spheres exit points of walks `0..n` in index order.
pub fn sample_exits_wos(
    domain: &DomainSpec,
    start: &Point,
    n_walks: usize,
    eps_shell: f64,
    seed: u64,
) -> Result<Vec<Point>> {
    if !(eps_shell > 0.0) {
        return Err(GreenError::InvalidParameter(format!(
            "eps_shell must be positive, got {eps_shell}"
        )));
    }
    (0..n_walks as u64)
        .into_par_iter()
        .map(|i| wos_exit(domain, start, eps_shell, &mut walk_rng(seed, i)))
        .collect()
}

/// Mean and standard error of `walk(i)` over `i < n`. Sums are taken about
/// the first sample and reduced block by block in index order.
fn run_walks<F>(n_walks: usize, seed: u64, walk: F) -> Result<Estimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    if n_walks == 0 {
        return Err(GreenError::InvalidParameter(
            "at least one walk is required".into(),
        ));
    }
    let shift = walk(&mut walk_rng(seed, 0))?;
    let blocks: Vec<(f64, f64)> = (0..n_walks.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let (mut s1, mut s2) = (0.0, 0.0);
            for i in (b * BLOCK).max(1)..((b + 1) * BLOCK).min(n_walks) {
                let d = walk(&mut walk_rng(seed, i as u64))? - shift;
                s1 += d;
                s2 += d * d;
            }
            Ok((s1, s2))
        })
        .collect::<Result<_>>()?;
    let (s1, s2) = blocks
        .iter()
        .fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let n = n_walks as f64;
    let mean = shift + s1 / n;
    let stderr = if n_walks > 1 {
        ((s2 - s1 * s1 / n).max(0.0) / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    if !mean.is_finite() {
        return Err(GreenError::InvalidParameter(
            "walk values are not finite".into(),
        ));
    }
    Ok(Estimate {
        mean,
        stderr,
        n_samples: n_walks,
        seed,
    })
}

fn require_dirichlet(bvp: &BoundaryValueProblem) -> Result<()> {
    if bvp.bc != Representation::Dirichlet {
        return Err(GreenError::Unsupported(
            "walks are absorbed; Neumann data needs reflection".into(),
        ));
    }
    Ok(())
}

/// Mean over walks of `φ(exit) + ∫₀^{τ⊥} f(X_s) ds`, by walk-on-spheres
/// when `f ≡ 0` and Euler–Maruyama otherwise.
pub fn estimate_solution_elliptic(
    bvp: &BoundaryValueProblem,
    eval_at: &Point,
    n_walks: usize,
    cfg: &WalkConfig,
    seed: u64,
) -> Result<Estimate> {
    if bvp.class != PdeClass::Elliptic {
        return Err(GreenError::InvalidParameter(format!(
            "expected an elliptic problem, got {}",
            bvp.class
        )));
    }
    require_dirichlet(bvp)?;
    let domain = &bvp.domain;
    let (phi, f): (&ScalarField, &ScalarField) = (&bvp.boundary, &bvp.source);
    if !interior_start(domain, eval_at)? {
        let v = phi.eval(eval_at, 0.0);
        return Ok(Estimate {
            mean: v,
            stderr: 0.0,
            n_samples: n_walks.max(1),
            seed,
        });
    }
    if f.is_zero() {
        return run_walks(n_walks, seed, |rng| {
            let p = wos_exit(domain, eval_at, cfg.eps_shell, rng)?;
            Ok(phi.eval(&p, 0.0))
        });
    }
    run_walks(n_walks, seed, |rng| {
        let mut acc = 0.0;
        let end = em_walk(domain, eval_at, cfg, rng, None, |x, _, h| {
            acc += f.eval(x, 0.0) * h
        })?;
        let WalkEnd::Exit { point, .. } = end else {
            unreachable!("walks without a horizon end by exiting")
        };
        Ok(phi.eval(&point, 0.0) + acc)
    })
}

/// Mean over Euler–Maruyama walks run backward from `(x, t)` of
/// `ψ(X_t)[τ⊥ > t] + φ(exit, t − τ⊥)[τ⊥ ≤ t] + ∫₀^{min(τ⊥, t)} f(X_s, t − s) ds`.
pub fn estimate_solution_parabolic(
    bvp: &BoundaryValueProblem,
    eval_at: &SpaceTimePoint,
    n_walks: usize,
    cfg: &WalkConfig,
    seed: u64,
) -> Result<Estimate> {
    if bvp.class != PdeClass::Parabolic {
        return Err(GreenError::InvalidParameter(format!(
            "expected a parabolic problem, got {}",
            bvp.class
        )));
    }
    require_dirichlet(bvp)?;
    let t = eval_at.time;
    if !(t > 0.0) {
        return Err(GreenError::InvalidParameter(format!(
            "evaluation time must be positive, got {t}"
        )));
    }
    let domain = &bvp.domain;
    let x: &[f64] = &eval_at.space;
    let (phi, f) = (&bvp.boundary, &bvp.source);
    let zero = ScalarField::zero();
    let psi = bvp.initial.as_ref().unwrap_or(&zero);
    if !interior_start(domain, x)? {
        return Ok(Estimate {
            mean: phi.eval(x, t),
            stderr: 0.0,
            n_samples: n_walks.max(1),
            seed,
        });
    }
    run_walks(n_walks, seed, |rng| {
        let mut acc = 0.0;
        let end = em_walk(domain, x, cfg, rng, Some(t), |y, s, h| {
            if !f.is_zero() {
                acc += f.eval(y, t - s) * h;
            }
        })?;
        Ok(acc
            + match end {
                WalkEnd::Exit { point, time } => phi.eval(&point, t - time),
                WalkEnd::Survived { point } => psi.eval(&point, 0.0),
            })
    })
}

/// Mean first-exit time by Euler–Maruyama. The discrete walk overshoots the
/// boundary, which biases the mean by `O(√step_dt)`; see [`exit_time_bias`].
pub fn estimate_mean_exit_time(
    domain: &DomainSpec,
    start: &Point,
    n_walks: usize,
    cfg: &WalkConfig,
    seed: u64,
) -> Result<Estimate> {
    match *domain {
        DomainSpec::Ball {
            side: BallSide::Interior,
            ..
        }
        | DomainSpec::UnitStrip { .. }
        | DomainSpec::UnitBox { .. } => {}
        _ => {
            return Err(GreenError::Unsupported(format!(
                "the exit time from {domain} has no finite mean"
            )))
        }
    }
    if !interior_start(domain, start)? {
        return Ok(Estimate {
            mean: 0.0,
            stderr: 0.0,
            n_samples: n_walks.max(1),
            seed,
        });
    }
    run_walks(n_walks, seed, |rng| {
        Ok(em_exit(domain, start, cfg, rng)?.exit_time)
    })
}

/// Size of the discretization bias of the mean exit time from the centre of
/// a ball: the walk behaves as if the radius were larger by
/// `β σ√dt` with `β = −ζ(1/2)/√(2π) ≈ 0.5826`, giving `(4πR/n) β √(dt/2π)`.
pub fn exit_time_bias(n: usize, radius: f64, step_dt: f64) -> f64 {
    const BETA: f64 = 0.5826;
    4.0 * PI * radius / n as f64 * BETA * (step_dt / (2.0 * PI)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Support;

    fn ball3() -> DomainSpec {
        DomainSpec::ball(3, 1.0, BallSide::Interior).unwrap()
    }

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(WalkConfig::new(0.0, 1e-3, 10).is_err());
        assert!(WalkConfig::new(1e-3, -1.0, 10).is_err());
        assert!(WalkConfig::new(1e-3, 1e-3, 0).is_err());
    }

    #[test]
    fn single_walks_are_deterministic() {
        let cfg = WalkConfig::new(1e-3, 1e-4, 1_000_000).unwrap();
        let a = sample_exit_em(&ball3(), &pt(&[0.1, 0.2, 0.0]), &cfg, 9).unwrap();
        let b = sample_exit_em(&ball3(), &pt(&[0.1, 0.2, 0.0]), &cfg, 9).unwrap();
        assert_eq!(a, b);
        assert!((norm(&a.exit_point) - 1.0).abs() < 1e-12);
        let w = sample_exit_wos(&ball3(), &pt(&[0.5, 0.0, 0.0]), 1e-4, 3).unwrap();
        assert!((norm(&w) - 1.0).abs() <= 1e-12);
        assert_eq!(
            w,
            sample_exit_wos(&ball3(), &pt(&[0.5, 0.0, 0.0]), 1e-4, 3).unwrap()
        );
    }

    #[test]
    fn constant_data_is_exact() {
        let p = BoundaryValueProblem::elliptic(ball3(), Representation::Dirichlet)
            .with_boundary(ScalarField::constant(0.1));
        let e =
            estimate_solution_elliptic(&p, &pt(&[0.2, 0.0, 0.0]), 500, &WalkConfig::default(), 1)
                .unwrap();
        assert_eq!(e.mean, 0.1);
        assert_eq!(e.stderr, 0.0);
        let free = BoundaryValueProblem::parabolic(
            DomainSpec::free_space(1).unwrap(),
            Representation::Dirichlet,
            ScalarField::constant(1.0),
        );
        let st = SpaceTimePoint::new(pt(&[0.0]), 0.5).unwrap();
        let cfg = WalkConfig::new(0.05, 1e-3, 100).unwrap();
        let e = estimate_solution_parabolic(&free, &st, 300, &cfg, 2).unwrap();
        assert_eq!((e.mean, e.stderr), (1.0, 0.0));
    }

    #[test]
    fn affine_data_by_walk_on_spheres() {
        let phi = ScalarField::parse("x1 + 2", Support::Everywhere).unwrap();
        let p =
            BoundaryValueProblem::elliptic(ball3(), Representation::Dirichlet).with_boundary(phi);
        let e = estimate_solution_elliptic(
            &p,
            &pt(&[0.5, 0.0, 0.0]),
            20_000,
            &WalkConfig::default(),
            5,
        )
        .unwrap();
        assert!((e.mean - 2.5).abs() < 3.0 * e.stderr + 1e-3, "{e:?}");
    }

    #[test]
    fn mean_exit_time_in_a_strip() {
        // Interval [0,1]: E τ = 2π x(1 − x).
        let strip = DomainSpec::unit_strip(1).unwrap();
        let cfg = WalkConfig::new(1e-4, 1e-4, 10_000_000).unwrap();
        let e = estimate_mean_exit_time(&strip, &pt(&[0.5]), 2000, &cfg, 11).unwrap();
        let want = 2.0 * PI * 0.25;
        assert!((e.mean - want).abs() < 3.0 * e.stderr + 0.01, "{e:?}");
        let on_wall = estimate_mean_exit_time(&strip, &pt(&[1.0]), 10, &cfg, 11).unwrap();
        assert_eq!(on_wall.mean, 0.0);
    }

    #[test]
    fn heavy_tailed_domains_are_rejected() {
        let cfg = WalkConfig::default();
        for d in [
            DomainSpec::half_space(1).unwrap(),
            DomainSpec::Quadrant,
            DomainSpec::free_space(2).unwrap(),
        ] {
            let start = pt(&vec![1.0; d.dim()]);
            assert!(matches!(
                estimate_mean_exit_time(&d, &start, 10, &cfg, 0),
                Err(GreenError::Unsupported(_))
            ));
        }
    }

    #[test]
    fn max_steps_is_reported() {
        let cfg = WalkConfig::new(1e-6, 1e-4, 10).unwrap();
        assert!(matches!(
            sample_exit_em(&ball3(), &pt(&[0.0; 3]), &cfg, 0),
            Err(GreenError::MaxStepsExceeded(10))
        ));
    }

    #[test]
    fn estimate_is_independent_of_thread_count() {
        let cfg = WalkConfig::new(1e-3, 1e-4, 10_000_000).unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    estimate_mean_exit_time(&ball3(), &pt(&[0.3, 0.0, 0.0]), 700, &cfg, 77).unwrap()
                })
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }
}
