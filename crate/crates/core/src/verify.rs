//! Self-verification suite. Each acceptance criterion is an executable check
//! against an independent oracle; reports are deterministic for a fixed seed.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::Serialize;
use statrs::function::erf::erf;

use crate::covering::{truncation_order, Representation, TruncationScale};
use crate::error::{GreenError, Result};
use crate::field::ScalarField;
use crate::geometry::{dist, norm, BallSide, DomainSpec, Point, SpaceTimePoint};
use crate::kernels::{
    ball_green_3d, ball_poisson_kernel, boundary_kernel_parabolic, domain_green, fixed_energy,
    free_elliptic, green_by_heat_integral, heat_domain_kernel, hyperbolic_i,
    quadrant_boundary_kernel, quadrant_green, quadrant_harmonic_density, strip_green_paired_images,
    EnergyParam, MollifierWidth, QuadrantMode,
};
use crate::montecarlo::{
    estimate_mean_exit_time, estimate_solution_parabolic, exit_time_bias, sample_exits_em_censored,
    sample_exits_wos, walk_rng, WalkConfig,
};
use crate::problem::BoundaryValueProblem;
use crate::quadrature::{
    integrate, integrate_breaks, integrate_real_line, integrate_to_infinity, sphere_integral,
    QuadratureMethod, QuadratureSpec, Tolerance,
};
use crate::solver::{solve_elliptic, solve_parabolic, solve_wave_retarded};

pub const CRITERIA: usize = 14;

const D: Representation = Representation::Dirichlet;
const N: Representation = Representation::Neumann;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Every check at reduced Monte Carlo sample sizes.
    Fast,
    /// Every check at the stated sample sizes.
    Full,
}

impl FromStr for Suite {
    type Err = GreenError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Self::Fast),
            "full" => Ok(Self::Full),
            _ => Err(GreenError::Parse {
                input: s.into(),
                reason: "expected fast or full".into(),
            }),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fast => "fast",
            Self::Full => "full",
        })
    }
}

struct Scale {
    first_passage: usize,
    erf_walks: usize,
    harmonic: usize,
    exit_time: usize,
    quadrant: usize,
}

impl Suite {
    fn scale(self) -> Scale {
        match self {
            Self::Full => Scale {
                first_passage: 100_000,
                erf_walks: 100_000,
                harmonic: 100_000,
                exit_time: 10_000,
                quadrant: 100_000,
            },
            Self::Fast => Scale {
                first_passage: 5_000,
                erf_walks: 10_000,
                harmonic: 20_000,
                exit_time: 500,
                quadrant: 20_000,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
    /// Extra tabular output, printed below the verdict line.
    pub table: Option<String>,
}

impl CriterionReport {
    fn new(
        id: usize,
        name: &'static str,
        measured: f64,
        threshold: f64,
        passed: bool,
        detail: String,
    ) -> Self {
        Self {
            id,
            name,
            passed,
            measured,
            threshold,
            detail,
            table: None,
        }
    }

    fn failed(id: usize, name: &'static str, err: GreenError) -> Self {
        Self::new(id, name, f64::NAN, f64::NAN, false, format!("error: {err}"))
    }

    /// `PASS|FAIL id name measured threshold detail`, plus any table.
    pub fn render(&self) -> String {
        let mut s = format!(
            "{} {:>2} {:<26} measured={:.6e} threshold={:.6e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.threshold
        );
        if !self.detail.is_empty() {
            s.push_str("  ");
            s.push_str(&self.detail);
        }
        if let Some(t) = &self.table {
            s.push('\n');
            s.push_str(t.trim_end());
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub criteria: Vec<CriterionReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.criteria {
            s.push_str(&c.render());
            s.push('\n');
        }
        let n_pass = self.criteria.iter().filter(|c| c.passed).count();
        s.push_str(&format!(
            "{} of {} criteria passed (suite {}, seed {})\n",
            n_pass,
            self.criteria.len(),
            self.suite,
            self.seed
        ));
        s
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> VerifyReport {
    let criteria = (1..=CRITERIA)
        .map(|id| run_criterion(id, suite, seed).expect("ids are in range"))
        .collect();
    VerifyReport {
        suite,
        seed,
        criteria,
    }
}

pub fn criterion_name(id: usize) -> Option<&'static str> {
    Some(match id {
        1 => "free elliptic kernel",
        2 => "heat semigroup",
        3 => "harmonicity",
        4 => "boundary vanishing",
        5 => "Poisson kernel mass",
        6 => "first-passage law",
        7 => "erf solution",
        8 => "harmonic measure",
        9 => "mean exit time",
        10 => "fixed-energy kernel",
        11 => "strip truncation",
        12 => "wave static limit",
        13 => "quadrant adjudication",
        14 => "quadrant Green arithmetic",
        _ => return None,
    })
}

pub fn run_criterion(id: usize, suite: Suite, seed: u64) -> Result<CriterionReport> {
    let name = criterion_name(id).ok_or_else(|| {
        GreenError::InvalidParameter(format!("criteria are numbered 1..={CRITERIA}, got {id}"))
    })?;
    let scale = suite.scale();
    let r = match id {
        1 => free_elliptic_vs_quadrature(name),
        2 => heat_semigroup(name),
        3 => harmonicity(name, seed),
        4 => boundary_vanishing(name, seed),
        5 => poisson_mass(name),
        6 => first_passage(name, scale.first_passage, seed),
        7 => erf_solution(name, scale.erf_walks, seed),
        8 => harmonic_measure(name, scale.harmonic, seed),
        9 => mean_exit_time(name, scale.exit_time, seed),
        10 => fixed_energy_check(name),
        11 => strip_truncation(name),
        12 => wave_static_limit(name),
        13 => quadrant_adjudication(name, scale.quadrant, seed),
        _ => quadrant_arithmetic(name, seed),
    };
    Ok(r.unwrap_or_else(|e| CriterionReport::failed(id, name, e)))
}

fn within_budget(elapsed: Duration, budget: Duration) -> (bool, String) {
    if elapsed < budget {
        (true, format!("under {} s", budget.as_secs()))
    } else {
        (
            false,
            format!(
                "took {:.1} s, budget {} s",
                elapsed.as_secs_f64(),
                budget.as_secs()
            ),
        )
    }
}

fn pt(v: &[f64]) -> Point {
    Point::from(v)
}

/// `∫₀^∞ τ^{−n/2} exp(−πr²/τ − 2πℰτ) dτ`, split at the peak.
pub fn tau_quadrature(n: usize, r: f64, energy: f64) -> f64 {
    let nf = n as f64;
    let g = |tau: f64| {
        if tau <= 0.0 {
            return 0.0;
        }
        (-(PI * r * r / tau) - 2.0 * PI * energy * tau - nf / 2.0 * tau.ln()).exp()
    };
    let peak = PI * r * r / (nf / 2.0);
    let tol = Tolerance::new(0.0, 1e-13);
    integrate(g, 0.0, peak, tol).value + integrate_to_infinity(g, peak, tol).value
}

fn free_elliptic_vs_quadrature(name: &'static str) -> Result<CriterionReport> {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for n in [3, 4, 5] {
        for r in [0.5, 1.0, 2.0] {
            let k = free_elliptic(n, r)?;
            let q = tau_quadrature(n, r, 0.0);
            worst = worst.max(((k - q) / q).abs());
        }
    }
    let (fast, timing) = within_budget(start.elapsed(), Duration::from_secs(1));
    Ok(CriterionReport::new(
        1,
        name,
        worst,
        1e-10,
        worst <= 1e-10 && fast,
        format!("max relative error, {timing}"),
    ))
}

fn heat_semigroup(name: &'static str) -> Result<CriterionReport> {
    let cases = [
        (0.3, 0.7, 0.2, 0.5),
        (1.0, 1.0, 0.1, 0.1),
        (0.5, 2.0, 1.0, 0.7),
        (0.05, 0.4, 0.03, 0.3),
        (2.0, 0.8, 2.0, 3.0),
    ];
    let tol = Tolerance::new(1e-13, 1e-12);
    let k = |d: &DomainSpec, bc, x: &[f64], y: &[f64], t: f64| {
        heat_domain_kernel(d, bc, x, t, y, 1e-15)
    };
    let mut worst: f64 = 0.0;
    let free1 = DomainSpec::free_space(1)?;
    let free2 = DomainSpec::free_space(2)?;
    let half = DomainSpec::half_space(1)?;
    for &(x, y, t1, t2) in &cases {
        let direct = k(&free1, D, &[x], &[y], t1 + t2)?;
        let conv = integrate_real_line(
            |z| k(&free1, D, &[x], &[z], t1).unwrap() * k(&free1, D, &[z], &[y], t2).unwrap(),
            0.5 * (x + y),
            tol,
        )
        .value;
        worst = worst.max((conv - direct).abs() / direct.abs().max(1.0));

        let (xp, yp) = ([x, 0.5], [y, -0.2]);
        let direct = k(&free2, D, &xp, &yp, t1 + t2)?;
        let conv = integrate_real_line(
            |z1| {
                integrate_real_line(
                    |z2| {
                        let z = [z1, z2];
                        k(&free2, D, &xp, &z, t1).unwrap() * k(&free2, D, &z, &yp, t2).unwrap()
                    },
                    0.15,
                    tol,
                )
                .value
            },
            0.5 * (x + y),
            tol,
        )
        .value;
        worst = worst.max((conv - direct).abs() / direct.abs().max(1.0));

        for bc in [D, N] {
            let direct = k(&half, bc, &[x], &[y], t1 + t2)?;
            let mid = x.max(y) + 1.0;
            let f = |z: f64| {
                k(&half, bc, &[x], &[z], t1).unwrap() * k(&half, bc, &[z], &[y], t2).unwrap()
            };
            let conv = integrate(f, 0.0, mid, tol).value + integrate_to_infinity(f, mid, tol).value;
            worst = worst.max((conv - direct).abs() / direct.abs().max(1.0));
        }
    }
    Ok(CriterionReport::new(
        2,
        name,
        worst,
        1e-8,
        worst <= 1e-8,
        "free n = 1, 2 and half-line (Dirichlet, Neumann), 5 cases each".into(),
    ))
}

/// Images of a source for the separation test of harmonicity probes.
fn singularities(domain: &DomainSpec, src: &[f64]) -> Vec<Vec<f64>> {
    let mut out = vec![src.to_vec()];
    match *domain {
        DomainSpec::Ball { radius, .. } => {
            let r2 = src.iter().map(|v| v * v).sum::<f64>();
            if r2 > 0.0 {
                out.push(src.iter().map(|v| v * radius * radius / r2).collect());
            }
        }
        DomainSpec::Quadrant => {
            for (sx, sy) in [(-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
                out.push(vec![sx * src[0], sy * src[1]]);
            }
        }
        DomainSpec::UnitStrip { .. } => {
            for k in -3..=3 {
                for s in [1.0, -1.0] {
                    out.push(vec![src[0], s * src[1] + 2.0 * k as f64]);
                }
            }
        }
        DomainSpec::UnitBox { .. } => {
            for k in -3..=3 {
                for m in -3..=3 {
                    for (s0, s1) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
                        out.push(vec![
                            s0 * src[0] + 2.0 * k as f64,
                            s1 * src[1] + 2.0 * m as f64,
                        ]);
                    }
                }
            }
        }
        _ => {}
    }
    out
}

/// Minimum distance from a probe to the source and its images.
const PROBE_SEPARATION: f64 = 0.55;
/// Minimum wall clearance of a probe.
const PROBE_CLEARANCE: f64 = 0.1;

fn harmonicity(name: &'static str, seed: u64) -> Result<CriterionReport> {
    let h = 1e-3;
    let setups: [(DomainSpec, Vec<f64>, [f64; 2]); 4] = [
        (
            DomainSpec::ball(3, 1.0, BallSide::Interior)?,
            vec![0.1, -0.1, 0.05],
            [-1.0, 1.0],
        ),
        (DomainSpec::Quadrant, vec![1.0, 1.0], [0.0, 3.0]),
        (DomainSpec::unit_strip(2)?, vec![0.0, 0.5], [-2.0, 2.0]),
        (DomainSpec::unit_box(2)?, vec![0.5, 0.5], [0.0, 1.0]),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (k, (domain, src, [lo, hi])) in setups.iter().enumerate() {
        let sing = singularities(domain, src);
        let mut rng = walk_rng(seed, 3_000 + k as u64);
        let g = |x: &[f64]| domain_green(domain, D, x, src, 1e-13);
        let mut probes = 0;
        let mut local: f64 = 0.0;
        while probes < 20 {
            let x: Vec<f64> = (0..domain.dim())
                .map(|i| {
                    // Strip probes span [0, 1] across the strip.
                    let (a, b) = if matches!(domain, DomainSpec::UnitStrip { .. }) && i == 1 {
                        (0.0, 1.0)
                    } else {
                        (*lo, *hi)
                    };
                    a + (b - a) * rng.random::<f64>()
                })
                .collect();
            if domain.clearance(&x) < PROBE_CLEARANCE
                || sing.iter().any(|s| dist(s, &x) < PROBE_SEPARATION)
            {
                continue;
            }
            let c = g(&x)?;
            let mut lap = 0.0;
            for i in 0..x.len() {
                let mut a = x.clone();
                let mut b = x.clone();
                a[i] += h;
                b[i] -= h;
                lap += (g(&a)? + g(&b)? - 2.0 * c) / (h * h);
            }
            local = local.max(lap.abs());
            probes += 1;
        }
        parts.push(format!("{domain} {local:.1e}"));
        worst = worst.max(local);
    }
    Ok(CriterionReport::new(
        3,
        name,
        worst,
        1e-4,
        worst <= 1e-4,
        format!("max |Δ_h K| over 20 probes: {}", parts.join(", ")),
    ))
}

fn random_unit<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        let l = norm(&v);
        if l > 0.1 && l <= 1.0 {
            return v.iter().map(|c| c / l).collect();
        }
    }
}

fn boundary_vanishing(name: &'static str, seed: u64) -> Result<CriterionReport> {
    let mut rng = walk_rng(seed, 4_000);
    let mut worst: f64 = 0.0;
    let ball = DomainSpec::ball(3, 1.0, BallSide::Interior)?;
    let half = DomainSpec::half_space(3)?;
    let strip = DomainSpec::unit_strip(2)?;
    let bx = DomainSpec::unit_box(2)?;
    let check = |v: f64, worst: &mut f64| *worst = worst.max(v.abs());
    for i in 0..100 {
        let u = rng.random::<f64>();
        let w = rng.random::<f64>();

        let src = [0.2, -0.3, 0.1];
        let xb = random_unit(&mut rng, 3);
        check(ball_green_3d(1.0, &xb, &src), &mut worst);
        check(domain_green(&ball, D, &xb, &src, 1e-13)?, &mut worst);

        let qsrc = [1.3, 0.6];
        let qb = if i % 2 == 0 {
            [5.0 * u, 0.0]
        } else {
            [0.0, 5.0 * u]
        };
        check(quadrant_green(&qb, &qsrc), &mut worst);
        check(
            domain_green(&DomainSpec::Quadrant, D, &qb, &qsrc, 1e-13)?,
            &mut worst,
        );

        let hsrc = [0.1, 0.4, 0.7];
        let hb = [4.0 * u - 2.0, 4.0 * w - 2.0, 0.0];
        let mirror = [hsrc[0], hsrc[1], -hsrc[2]];
        check(
            free_elliptic(3, dist(&hb, &hsrc))? - free_elliptic(3, dist(&hb, &mirror))?,
            &mut worst,
        );
        check(domain_green(&half, D, &hb, &hsrc, 1e-13)?, &mut worst);

        let ssrc = [0.3, 0.4];
        let sb = [4.0 * u - 2.0, (i % 2) as f64];
        check(
            green_by_heat_integral(&strip, D, &sb, &ssrc, 1e-13)?,
            &mut worst,
        );
        check(domain_green(&strip, D, &sb, &ssrc, 1e-13)?, &mut worst);

        let bsrc = [0.35, 0.6];
        let side = (i % 4) as f64;
        let bb = match i % 4 {
            0 | 1 => [u, side.min(1.0)],
            _ => [side - 2.0, u],
        };
        check(
            green_by_heat_integral(&bx, D, &bb, &bsrc, 1e-13)?,
            &mut worst,
        );
        check(domain_green(&bx, D, &bb, &bsrc, 1e-13)?, &mut worst);
    }
    // Neumann: outward derivative of the half-space heat kernel at the wall,
    // by a fourth-order one-sided difference.
    let h = 1e-3;
    let mut flux: f64 = 0.0;
    for n in [1usize, 2] {
        let hs = DomainSpec::half_space(n)?;
        for (y, t) in [(0.4, 0.3), (1.0, 1.0), (0.2, 2.0), (0.7, 0.5)] {
            let mut yp = vec![0.25; n];
            yp[n - 1] = y;
            let k = |s: f64| {
                let mut x = vec![-0.1; n];
                x[n - 1] = s;
                heat_domain_kernel(&hs, N, &x, t, &yp, 1e-15)
            };
            let d = (-25.0 * k(0.0)? + 48.0 * k(h)? - 36.0 * k(2.0 * h)? + 16.0 * k(3.0 * h)?
                - 3.0 * k(4.0 * h)?)
                / (12.0 * h);
            flux = flux.max(d.abs());
        }
    }
    let passed = worst <= 1e-12 && flux <= 1e-8;
    Ok(CriterionReport::new(
        4,
        name,
        worst,
        1e-12,
        passed,
        format!("100 probes on ball, quadrant, half-space, strip, box; Neumann wall flux {flux:.1e} (threshold 1e-8)"),
    ))
}

fn poisson_mass(name: &'static str) -> Result<CriterionReport> {
    let dir = [0.48, 0.6, 0.64];
    let quad = QuadratureSpec::new(QuadratureMethod::SphereCubature, 1e-11, 50_000_000)?;
    let mut mass_err: f64 = 0.0;
    let mut solve_err: f64 = 0.0;
    for radius in [1.0, 2.0] {
        let ball = DomainSpec::ball(3, radius, BallSide::Interior)?;
        let problem =
            BoundaryValueProblem::elliptic(ball, D).with_boundary(ScalarField::constant(1.0));
        for r in [0.0, 0.3, 0.9] {
            let x: Vec<f64> = dir.iter().map(|d| d * r).collect();
            let pole = if r > 0.0 {
                x.clone()
            } else {
                vec![0.0, 0.0, 1.0]
            };
            let m = sphere_integral(
                |y| ball_poisson_kernel(3, radius, &x, y),
                &[0.0; 3],
                radius,
                &pole,
                Tolerance::new(1e-12, 1e-12),
            )
            .value;
            mass_err = mass_err.max((m - 1.0).abs());
            let v = solve_elliptic(&problem, &pt(&x), &quad)?;
            solve_err = solve_err.max((v - 1.0).abs());
        }
    }
    let worst = mass_err.max(solve_err);
    Ok(CriterionReport::new(
        5,
        name,
        worst,
        1e-8,
        worst <= 1e-8,
        format!("cubature {mass_err:.1e}, solve_elliptic {solve_err:.1e}"),
    ))
}

/// Censoring horizon of the first-passage histogram.
const PASSAGE_HORIZON: f64 = 2.0;

fn first_passage(name: &'static str, n_walks: usize, seed: u64) -> Result<CriterionReport> {
    let start = Instant::now();
    let hs = DomainSpec::half_space(1)?;
    let density = |dt: f64| boundary_kernel_parabolic(&hs, &[1.0], dt, &[0.0]).unwrap();
    let mass = integrate_to_infinity(density, 0.0, Tolerance::new(1e-13, 1e-13)).value;
    let mass_err = (mass - 1.0).abs();

    let cfg = WalkConfig::new(1e-4, 1e-4, 100_000_000)?;
    let records = sample_exits_em_censored(&hs, &pt(&[1.0]), n_walks, &cfg, seed, PASSAGE_HORIZON)?;
    let mut times: Vec<f64> = records.iter().flatten().map(|r| r.exit_time).collect();
    times.sort_by(f64::total_cmp);
    let n = n_walks as f64;
    let tol = Tolerance::new(1e-14, 1e-12);
    let (mut cdf, mut prev, mut ks): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (i, &t) in times.iter().enumerate() {
        cdf += integrate(density, prev, t, tol).value;
        prev = t;
        ks = ks.max((i as f64 + 1.0) / n - cdf).max(cdf - i as f64 / n);
    }
    cdf += integrate(density, prev, PASSAGE_HORIZON, tol).value;
    ks = ks.max((times.len() as f64 / n - cdf).abs());
    let threshold = 1.63 / n.sqrt();
    let (fast, timing) = within_budget(start.elapsed(), Duration::from_secs(60));
    let passed = mass_err <= 1e-8 && ks < threshold && fast;
    Ok(CriterionReport::new(
        6,
        name,
        ks,
        threshold,
        passed,
        format!(
            "KS over [0, {PASSAGE_HORIZON}] with {n_walks} walks ({} exits), density mass error {mass_err:.1e}, {timing}",
            times.len()
        ),
    ))
}

fn erf_solution(name: &'static str, n_walks: usize, seed: u64) -> Result<CriterionReport> {
    let exact = 1.0 - erf(PI.sqrt());
    let problem =
        BoundaryValueProblem::parabolic(DomainSpec::half_space(1)?, D, ScalarField::zero())
            .with_boundary(ScalarField::constant(1.0));
    let at = SpaceTimePoint::new(pt(&[1.0]), 1.0)?;
    let quad = QuadratureSpec::new(QuadratureMethod::Adaptive1d, 1e-10, 50_000_000)?;
    let v = solve_parabolic(&problem, &at, &quad)?;
    let err = (v - exact).abs();
    let cfg = WalkConfig::new(1e-3, 1e-4, 100_000_000)?;
    let est = estimate_solution_parabolic(&problem, &at, n_walks, &cfg, seed)?;
    let z = (est.mean - exact) / est.stderr;
    Ok(CriterionReport::new(
        7,
        name,
        err,
        1e-6,
        err <= 1e-6 && z.abs() <= 3.0,
        format!(
            "MC {:.5} ± {:.5} over {n_walks} walks, z = {z:.2}",
            est.mean, est.stderr
        ),
    ))
}

/// Index of a patch on the unit sphere: 4 equal-area bands in z times 6
/// sectors in azimuth.
fn sphere_patch(p: &[f64]) -> usize {
    let band = (((p[2] + 1.0) / 0.5).floor() as isize).clamp(0, 3) as usize;
    let sector = (((p[1].atan2(p[0]) + PI) / (PI / 3.0)).floor() as isize).clamp(0, 5) as usize;
    band * 6 + sector
}

fn patch_probability(x: &[f64], patch: usize) -> f64 {
    let (band, sector) = (patch / 6, patch % 6);
    let (z0, p0) = (-1.0 + 0.5 * band as f64, -PI + PI / 3.0 * sector as f64);
    let tol = Tolerance::new(1e-13, 1e-12);
    integrate(
        |z| {
            let s = (1.0 - z * z).max(0.0).sqrt();
            integrate(
                |phi| ball_poisson_kernel(3, 1.0, x, &[s * phi.cos(), s * phi.sin(), z]),
                p0,
                p0 + PI / 3.0,
                tol,
            )
            .value
        },
        z0,
        z0 + 0.5,
        tol,
    )
    .value
}

fn harmonic_measure(name: &'static str, n_walks: usize, seed: u64) -> Result<CriterionReport> {
    let start = Instant::now();
    let ball = DomainSpec::ball(3, 1.0, BallSide::Interior)?;
    let x = [0.5, 0.0, 0.0];
    let exits = sample_exits_wos(&ball, &pt(&x), n_walks, 1e-4, seed)?;
    let mut counts = [0usize; 24];
    for p in &exits {
        counts[sphere_patch(p)] += 1;
    }
    let elapsed = start.elapsed();
    let n = n_walks as f64;
    let mut total_p = 0.0;
    let mut worst: f64 = 0.0;
    for (k, &c) in counts.iter().enumerate() {
        let p = patch_probability(&x, k);
        total_p += p;
        let z = (c as f64 - n * p) / (n * p * (1.0 - p)).sqrt();
        worst = worst.max(z.abs());
    }
    let (fast, timing) = within_budget(elapsed, Duration::from_secs(10));
    Ok(CriterionReport::new(
        8,
        name,
        worst,
        3.0,
        worst <= 3.0 && (total_p - 1.0).abs() < 1e-8 && fast,
        format!("max |z| over 24 patches, {n_walks} walks, cubature mass {total_p:.10}, sampling {timing}"),
    ))
}

fn mean_exit_time(name: &'static str, n_walks: usize, seed: u64) -> Result<CriterionReport> {
    let ball = DomainSpec::ball(3, 1.0, BallSide::Interior)?;
    let dt = 1e-4;
    let cfg = WalkConfig::new(dt, 1e-4, 100_000_000)?;
    let est = estimate_mean_exit_time(&ball, &pt(&[0.0; 3]), n_walks, &cfg, seed)?;
    let exact = 2.0 * PI / 3.0;
    let band = exit_time_bias(3, 1.0, dt);
    let threshold = 3.0 * est.stderr + band;
    let err = (est.mean - exact).abs();
    Ok(CriterionReport::new(
        9,
        name,
        err,
        threshold,
        err <= threshold,
        format!(
            "mean {:.5} ± {:.5} over {n_walks} walks, bias band {band:.4}",
            est.mean, est.stderr
        ),
    ))
}

fn fixed_energy_check(name: &'static str) -> Result<CriterionReport> {
    let mut worst: f64 = 0.0;
    for r in [0.5, 1.0, 2.0] {
        for e in [0.1f64, 1.0] {
            let closed = (-2.0 * PI * r * (2.0 * e).sqrt()).exp() / r;
            let q = tau_quadrature(3, r, e);
            let k = fixed_energy(3, r, EnergyParam::new(e)?)?;
            worst = worst.max(((closed - q) / q).abs()).max(((k - q) / q).abs());
        }
    }
    let mut zero: f64 = 0.0;
    for n in [3, 4, 5] {
        for r in [0.5, 1.0, 2.0] {
            let k = fixed_energy(n, r, EnergyParam::new(0.0)?)?;
            let q = tau_quadrature(n, r, 0.0);
            zero = zero
                .max(((k - q) / q).abs())
                .max(((k - free_elliptic(n, r)?) / q).abs());
        }
    }
    Ok(CriterionReport::new(
        10,
        name,
        worst,
        1e-8,
        worst <= 1e-8 && zero <= 1e-10,
        format!("relative; ℰ = 0 reduction {zero:.1e} (threshold 1e-10)"),
    ))
}

/// `K₀(z) = ∫₀^∞ e^{−z cosh t} dt` by the trapezoid rule, which converges
/// geometrically for this integrand.
pub fn bessel_k0(z: f64) -> f64 {
    let h = 0.05;
    let t_max = (745.0 / z).max(1.0).acosh();
    let m = (t_max / h).ceil() as usize;
    let mut s = 0.5 * (-z).exp();
    for k in 1..=m {
        s += (-z * (k as f64 * h).cosh()).exp();
    }
    s * h
}

/// Three-dimensional Dirichlet strip Green function by its sine series in
/// the bounded coordinate.
pub fn strip_sine_series(x: &[f64], y: &[f64]) -> f64 {
    let rho = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
    let mut s = 0.0;
    let mut k = 1usize;
    loop {
        let kp = k as f64 * PI;
        if kp * rho > 745.0 {
            break;
        }
        let term = 4.0 * (kp * x[2]).sin() * (kp * y[2]).sin() * bessel_k0(kp * rho);
        s += term;
        if kp * rho > 40.0 {
            break;
        }
        k += 1;
    }
    s
}

fn strip_truncation(name: &'static str) -> Result<CriterionReport> {
    let strip = DomainSpec::unit_strip(3)?;
    let pairs: [([f64; 3], [f64; 3]); 5] = [
        ([0.0, 0.0, 0.3], [0.5, 0.0, 0.6]),
        ([0.2, -0.1, 0.5], [0.2, 0.4, 0.5]),
        ([1.0, 1.0, 0.1], [0.0, 0.5, 0.9]),
        ([0.0, 0.0, 0.75], [1.5, 0.0, 0.25]),
        ([-0.3, 0.2, 0.45], [0.1, 0.0, 0.2]),
    ];
    let mut interior: f64 = 0.0;
    let mut boundary: f64 = 0.0;
    let mut orders = Vec::new();
    for (x, y) in &pairs {
        let m = truncation_order(
            &strip,
            TruncationScale::Elliptic {
                distance: dist(x, y),
            },
            1e-8,
        )?;
        let g = strip_green_paired_images(3, x, y, m)?;
        interior = interior.max((g - strip_sine_series(x, y)).abs());
        orders.push(m);
        for wall in [0.0, 1.0] {
            let xb = [x[0], x[1], wall];
            let mb = truncation_order(
                &strip,
                TruncationScale::Elliptic {
                    distance: dist(&xb, y),
                },
                1e-10,
            )?;
            boundary = boundary.max(strip_green_paired_images(3, &xb, y, mb)?.abs());
        }
    }
    Ok(CriterionReport::new(
        11,
        name,
        interior,
        1e-8,
        interior <= 1e-8 && boundary <= 1e-10,
        format!("interior vs sine series; boundary max {boundary:.1e} (threshold 1e-10); M = {orders:?}"),
    ))
}

fn wave_static_limit(name: &'static str) -> Result<CriterionReport> {
    let center = vec![0.1, 0.0, -0.2];
    let radius = 0.5;
    let support = crate::field::Support::Ball {
        center: center.clone(),
        radius,
    };
    let f = ScalarField::spatial(
        move |y| {
            let r2: f64 = y.iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum();
            (1.0 - r2 / (radius * radius)).powi(2)
        },
        support,
    );
    let x = [0.4, 0.3, 0.1];
    let t = 10.0 * 2.0 * radius;
    let quad = QuadratureSpec::new(QuadratureMethod::Adaptive1d, 1e-9, 50_000_000)?;
    let wave = BoundaryValueProblem::hyperbolic(ScalarField::zero(), ScalarField::zero())
        .with_source(f.clone());
    let w = solve_wave_retarded(&wave, &SpaceTimePoint::new(pt(&x), t)?, &quad)?;
    let ell = BoundaryValueProblem::elliptic(DomainSpec::free_space(3)?, D).with_source(f);
    let e = solve_elliptic(&ell, &pt(&x), &quad)?;
    let rel = ((w - e) / e).abs();

    let pair = |width: f64| -> Result<f64> {
        let w = MollifierWidth::new(width)?;
        let v = integrate_real_line(
            |u| hyperbolic_i(4, u, w).unwrap() * (-u * u).exp(),
            0.0,
            Tolerance::new(1e-15, 1e-14),
        )
        .value;
        Ok((v - 2.0).abs())
    };
    let errs = [pair(0.1)?, pair(0.05)?, pair(0.025)?];
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    let ratio_ok = ratios.iter().all(|r| (r - 4.0).abs() <= 0.8);
    Ok(CriterionReport::new(
        12,
        name,
        rel,
        1e-3,
        rel <= 1e-3 && ratio_ok,
        format!(
            "relative wave/elliptic at t = {t}; pairing error ratios {:.3}, {:.3} (4 ± 0.8)",
            ratios[0], ratios[1]
        ),
    ))
}

/// Bin edges along each quadrant wall.
const QUADRANT_BINS: [f64; 8] = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, f64::INFINITY];

type BoundaryDensity<'a> = &'a dyn Fn(&[f64], &[f64]) -> f64;

fn quadrant_bin_mass(
    x: &[f64],
    axis: usize,
    a: f64,
    b: f64,
    g: &dyn Fn(&[f64], &[f64]) -> f64,
) -> f64 {
    let at = |t: f64| {
        let mut xb = [0.0; 2];
        xb[axis] = t;
        g(x, &xb)
    };
    let tol = Tolerance::new(1e-13, 1e-12);
    if b.is_finite() {
        integrate_breaks(&mut |t| at(t), &[a, b], tol).value
    } else {
        integrate_to_infinity(at, a, tol).value
    }
}

fn quadrant_adjudication(name: &'static str, n_walks: usize, seed: u64) -> Result<CriterionReport> {
    let x = [1.0, 1.0];
    let exits = sample_exits_wos(&DomainSpec::Quadrant, &pt(&x), n_walks, 1e-5, seed)?;
    let nb = QUADRANT_BINS.len() - 1;
    let mut counts = vec![0usize; 2 * nb];
    for p in &exits {
        // Exits on the x¹-axis (x² = 0) go to the first block.
        let (axis, t) = if p[1] <= p[0] { (0, p[0]) } else { (1, p[1]) };
        let bin = QUADRANT_BINS
            .windows(2)
            .position(|w| t >= w[0] && t < w[1])
            .unwrap_or(nb - 1);
        counts[axis * nb + bin] += 1;
    }
    let printed = |x: &[f64], xb: &[f64]| {
        quadrant_boundary_kernel(x, xb, QuadrantMode::Printed).unwrap_or(0.0)
    };
    let normalized = |x: &[f64], xb: &[f64]| {
        quadrant_boundary_kernel(x, xb, QuadrantMode::Normalized).unwrap_or(0.0)
    };
    let exact = |x: &[f64], xb: &[f64]| quadrant_harmonic_density(x, xb).unwrap_or(0.0);
    let modes: [(&str, BoundaryDensity); 3] = [
        ("printed", &printed),
        ("normalized", &normalized),
        ("exact", &exact),
    ];
    let n = n_walks as f64;
    let mut table = format!(
        "{:<6} {:<11} {:>9} {:>10} {:>10} {:>10}\n",
        "wall", "bin", "MC", "printed", "normalized", "exact"
    );
    let mut max_z = [0.0f64; 3];
    for axis in 0..2 {
        for b in 0..nb {
            let (lo, hi) = (QUADRANT_BINS[b], QUADRANT_BINS[b + 1]);
            let c = counts[axis * nb + b] as f64;
            let f = c / n;
            let se = (f * (1.0 - f) / n).sqrt().max(1.0 / n);
            let mut row = format!(
                "{:<6} {:<11} {:>9.5}",
                if axis == 0 { "x2=0" } else { "x1=0" },
                format!("[{lo},{hi})"),
                f
            );
            for (m, (_, g)) in modes.iter().enumerate() {
                let p = quadrant_bin_mass(&x, axis, lo, hi, *g);
                max_z[m] = max_z[m].max(((f - p) / se).abs());
                row.push_str(&format!(" {p:>10.5}"));
            }
            table.push_str(&row);
            table.push('\n');
        }
    }
    let verdict: Vec<String> = modes
        .iter()
        .zip(&max_z)
        .map(|((label, _), z)| {
            format!(
                "{label} {} (max |z| {z:.1})",
                if *z <= 3.0 { "matches" } else { "rejected" }
            )
        })
        .collect();
    let mut report = CriterionReport::new(
        13,
        name,
        max_z[2],
        3.0,
        true,
        format!("{n_walks} walks from (1, 1): {}", verdict.join("; ")),
    );
    report.table = Some(table);
    Ok(report)
}

fn quadrant_arithmetic(name: &'static str, seed: u64) -> Result<CriterionReport> {
    let q = DomainSpec::Quadrant;
    let v = domain_green(&q, D, &[1.0, 1.0], &[2.0, 1.0], 1e-13)?;
    let err = (v - (45.0f64 / 13.0).ln()).abs();
    let mut rng = walk_rng(seed, 14_000);
    let mut boundary: f64 = 0.0;
    for i in 0..20 {
        let t = 4.0 * rng.random::<f64>();
        let xb = if i % 2 == 0 { [t, 0.0] } else { [0.0, t] };
        boundary = boundary.max(quadrant_green(&xb, &[1.0, 1.0]).abs());
        boundary = boundary.max(domain_green(&q, D, &xb, &[1.0, 1.0], 1e-13)?.abs());
    }
    Ok(CriterionReport::new(
        14,
        name,
        err,
        1e-12,
        err <= 1e-12 && boundary <= 1e-12,
        format!("G((1,1),(2,1)) = {v:.15}; boundary max {boundary:.1e}"),
    ))
}
