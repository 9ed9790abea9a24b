//! Command-line front end: `kernel`, `solve`, `mc` and `verify`.
//!
//! Exit codes: 0 success, 1 a verification criterion failed, 2 usage or
//! parameter error, 3 I/O failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::covering::{enumerate_images, Representation};
use crate::error::GreenError;
use crate::geometry::{dist, DomainSpec, Point, SpaceTimePoint};
use crate::kernels::{
    boundary_kernel_elliptic, boundary_kernel_parabolic, domain_green, fixed_energy, free_elliptic,
    free_heat, heat_domain_kernel, hyperbolic_i, quadrant_boundary_kernel, EnergyParam, KernelCase,
    MollifierWidth, QuadrantMode,
};
use crate::montecarlo::{
    estimate_mean_exit_time, estimate_solution_elliptic, estimate_solution_parabolic,
    sample_exits_em, sample_exits_em_censored, ExitRecord, WalkConfig,
};
use crate::problem::{BoundaryValueProblem, PdeClass};
use crate::quadrature::{QuadratureMethod, QuadratureSpec};
use crate::solver::{solve_elliptic, solve_parabolic, solve_wave_retarded};
use crate::verify::{run_criterion, run_suite, Suite, VerifyReport, CRITERIA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Environment variable read when `--threads` is absent.
pub const THREADS_ENV: &str = "GREENPATH_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "greenpath",
    version,
    about = "Green's functions of canonical domains by images, quadrature and random walks"
)]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write results here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate a kernel, one CSV row per evaluation point.
    Kernel(KernelArgs),
    /// Solve a problem file on a grid.
    Solve(SolveArgs),
    /// Monte Carlo estimate at one point.
    Mc(McArgs),
    /// Run the acceptance checks.
    Verify(VerifyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum KernelKind {
    Elliptic,
    Heat,
    Schrodinger,
    FixedEnergy,
    Green,
    Poisson,
    FirstPassage,
    #[value(name = "wave-I")]
    WaveI,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    #[value(name = "adaptive-1d")]
    Adaptive1d,
    TensorGauss,
    SphereCubature,
}

impl From<Method> for QuadratureMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Adaptive1d => Self::Adaptive1d,
            Method::TensorGauss => Self::TensorGauss,
            Method::SphereCubature => Self::SphereCubature,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Quantity {
    Solution,
    ExitTime,
}

/// Comma-separated coordinates.
#[derive(Clone, Debug, PartialEq)]
struct Coords(Vec<f64>);

impl FromStr for Coords {
    type Err = GreenError;
    fn from_str(s: &str) -> Result<Self, GreenError> {
        s.split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map(Coords)
            .map_err(|e| GreenError::Parse {
                input: s.into(),
                reason: e.to_string(),
            })
    }
}

/// Evaluation grid: per axis either a fixed value or `lo:hi:count`.
#[derive(Clone, Debug, PartialEq)]
struct Grid(Vec<Vec<f64>>);

impl FromStr for Grid {
    type Err = GreenError;
    fn from_str(s: &str) -> Result<Self, GreenError> {
        let fail = |reason: String| GreenError::Parse {
            input: s.into(),
            reason,
        };
        let axes = s
            .split(',')
            .map(|axis| {
                let parts: Vec<&str> = axis.trim().split(':').collect();
                let num = |t: &str| t.parse::<f64>().map_err(|e| fail(format!("{t}: {e}")));
                match parts.as_slice() {
                    [v] => Ok(vec![num(v)?]),
                    [lo, hi, count] => {
                        let (lo, hi) = (num(lo)?, num(hi)?);
                        let count: usize = count
                            .parse()
                            .map_err(|_| fail(format!("bad count `{count}`")))?;
                        match count {
                            0 => Err(fail("count must be at least 1".into())),
                            1 => Ok(vec![lo]),
                            _ => Ok((0..count)
                                .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                                .collect()),
                        }
                    }
                    _ => Err(fail(format!(
                        "axis `{axis}` is neither a value nor lo:hi:count"
                    ))),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Grid(axes))
    }
}

impl Grid {
    /// Grid points with the last axis varying fastest.
    fn points(&self) -> Vec<Vec<f64>> {
        let mut pts = vec![Vec::new()];
        for axis in &self.0 {
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        pts
    }
}

#[derive(Args, Debug)]
struct KernelArgs {
    #[arg(long, value_enum, default_value = "green")]
    kernel: KernelKind,
    /// free:<n>, halfspace:<n>, strip:<n>, box:<n>, ball:<n>:<R>, ball-ext:<n>:<R> or quadrant.
    #[arg(long)]
    domain: DomainSpec,
    #[arg(long, default_value = "dirichlet")]
    bc: Representation,
    /// Evaluation point (the argument u for wave-I); repeat for more rows.
    #[arg(long = "x", required = true, allow_hyphen_values = true)]
    x: Vec<Coords>,
    /// Source point, or boundary point for poisson and first-passage.
    #[arg(long, allow_hyphen_values = true)]
    xp: Option<Coords>,
    /// Elapsed time for heat, schrodinger and first-passage.
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    energy: f64,
    /// Mollifier width for wave-I.
    #[arg(long, default_value_t = 0.05)]
    width: f64,
    /// Quadrant segment-kernel normalization for poisson.
    #[arg(long, default_value = "printed")]
    mode: QuadrantMode,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Print the image expansion of the source point to standard error as JSON.
    #[arg(long, value_name = "ORDER")]
    dump_images: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// TOML problem file.
    #[arg(long)]
    problem: PathBuf,
    /// Per axis a value or lo:hi:count, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    grid: Grid,
    /// Evaluation times (ignored for elliptic problems).
    #[arg(long, default_value = "0")]
    times: Coords,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, value_enum, default_value = "adaptive-1d")]
    method: Method,
    #[arg(long, default_value_t = 50_000_000)]
    max_evals: usize,
}

#[derive(Args, Debug)]
struct McArgs {
    /// TOML problem file.
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    at: Coords,
    /// Evaluation time of a parabolic problem.
    #[arg(long, default_value_t = 0.0)]
    time: f64,
    #[arg(long, default_value_t = 10_000)]
    walks: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    dt: f64,
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    #[arg(long, default_value_t = 100_000_000)]
    max_steps: usize,
    #[arg(long, value_enum, default_value = "solution")]
    quantity: Quantity,
    /// Also write per-walk Euler–Maruyama exit records as CSV.
    #[arg(long, value_name = "PATH")]
    per_walk: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value = "fast")]
    suite: Suite,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Run one criterion only.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=CRITERIA as u64))]
    criterion: Option<u64>,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
}

enum Failure {
    Usage(String),
    Io(String),
}

impl From<GreenError> for Failure {
    fn from(e: GreenError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

struct Outcome {
    body: String,
    /// Diagnostics for standard error.
    diag: String,
    code: i32,
}

/// Runs the command line `args` (program name first) against the process
/// standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// As [`run`], writing to the given streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let threads = match cli.threads {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => match v.trim().parse() {
                Ok(n) => n,
                Err(_) => {
                    let _ = writeln!(
                        err,
                        "error: {THREADS_ENV} must be a non-negative integer, got `{v}`"
                    );
                    return EXIT_USAGE;
                }
            },
            Err(_) => 0,
        },
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start worker threads: {e}");
            return EXIT_IO;
        }
    };
    let result = pool.install(|| execute(cli.command));
    match result {
        Ok(Outcome { body, diag, code }) => {
            let _ = err.write_all(diag.as_bytes());
            let written = match &cli.output {
                Some(path) => std::fs::write(path, body.as_bytes())
                    .map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => out.write_all(body.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => code,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_IO
                }
            }
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Io(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_IO
        }
    }
}

fn execute(command: Command) -> Result<Outcome, Failure> {
    let mut diag = String::new();
    let body = match command {
        Command::Kernel(a) => kernel(&a, &mut diag)?,
        Command::Solve(a) => solve(&a)?,
        Command::Mc(a) => mc(&a)?,
        Command::Verify(a) => return verify(&a),
    };
    Ok(Outcome {
        body,
        diag,
        code: EXIT_OK,
    })
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

fn kernel(a: &KernelArgs, diag: &mut String) -> Result<String, Failure> {
    let n = a.domain.dim();
    let need_xp = || {
        a.xp.as_ref().map(|c| c.0.as_slice()).ok_or_else(|| {
            Failure::Usage(format!(
                "--xp is required for --kernel {}",
                kernel_name(a.kernel)
            ))
        })
    };
    let need_dt = || {
        a.dt.ok_or_else(|| {
            Failure::Usage(format!(
                "--dt is required for --kernel {}",
                kernel_name(a.kernel)
            ))
        })
    };
    let free_only = || -> Result<(), Failure> {
        match a.domain {
            DomainSpec::FreeSpace { .. } => Ok(()),
            _ => Err(Failure::Usage(format!(
                "--kernel {} is a free-space kernel, got {}",
                kernel_name(a.kernel),
                a.domain
            ))),
        }
    };
    if let Some(order) = a.dump_images {
        let expansion = enumerate_images(&a.domain, need_xp()?, order)?;
        let _ = writeln!(diag, "{}", serde_json::to_string(&expansion)?);
    }
    let case = match a.kernel {
        KernelKind::Schrodinger | KernelKind::WaveI => "i",
        _ => "1",
    };
    let mut rows = Vec::with_capacity(a.x.len());
    for Coords(x) in &a.x {
        let value: Complex64 = match a.kernel {
            KernelKind::Elliptic => {
                free_only()?;
                free_elliptic(n, dist(x, need_xp()?))?.into()
            }
            KernelKind::Heat => {
                heat_domain_kernel(&a.domain, a.bc, x, need_dt()?, need_xp()?, a.tol)?.into()
            }
            KernelKind::Schrodinger => {
                free_only()?;
                let xp = need_xp()?;
                a.domain.check_point(x)?;
                a.domain.check_point(xp)?;
                free_heat(n, dist(x, xp), need_dt()?, KernelCase::Imaginary)?
            }
            KernelKind::FixedEnergy => {
                free_only()?;
                fixed_energy(n, dist(x, need_xp()?), EnergyParam::new(a.energy)?)?.into()
            }
            KernelKind::Green => domain_green(&a.domain, a.bc, x, need_xp()?, a.tol)?.into(),
            KernelKind::Poisson => match a.domain {
                DomainSpec::Quadrant => quadrant_boundary_kernel(x, need_xp()?, a.mode)?.into(),
                _ => boundary_kernel_elliptic(&a.domain, x, need_xp()?)?.into(),
            },
            KernelKind::FirstPassage => {
                boundary_kernel_parabolic(&a.domain, x, need_dt()?, need_xp()?)?.into()
            }
            KernelKind::WaveI => {
                let [u] = x.as_slice() else {
                    return Err(Failure::Usage(
                        "--kernel wave-I takes a single value u in --x".into(),
                    ));
                };
                hyperbolic_i(n, *u, MollifierWidth::new(a.width)?)?.into()
            }
        };
        let mut coords = x.clone();
        if a.kernel != KernelKind::WaveI {
            if let Some(xp) = &a.xp {
                coords.extend_from_slice(&xp.0);
            }
        }
        rows.push((coords, value));
    }
    let bc = a.bc.to_string();
    let domain = a.domain.to_string();
    Ok(match a.format {
        TableFormat::Csv => {
            let mut s = String::new();
            for (coords, v) in &rows {
                let _ = write!(s, "{domain},{bc},{case},{n}");
                for c in coords {
                    let _ = write!(s, ",{}", sci(*c));
                }
                let _ = writeln!(s, ",{},{}", sci(v.re), sci(v.im));
            }
            s
        }
        TableFormat::Json => {
            let items: Vec<_> = rows
                .iter()
                .map(|(coords, v)| {
                    serde_json::json!({
                        "domain": domain, "bc": bc, "s": case, "n": n,
                        "coords": coords, "value_re": v.re, "value_im": v.im,
                    })
                })
                .collect();
            serde_json::to_string_pretty(&items)? + "\n"
        }
    })
}

fn kernel_name(k: KernelKind) -> String {
    k.to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default()
}

fn read_problem(path: &PathBuf) -> Result<BoundaryValueProblem, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    Ok(text.parse()?)
}

fn solve(a: &SolveArgs) -> Result<String, Failure> {
    let bvp = read_problem(&a.problem)?;
    let quad = QuadratureSpec::new(a.method.into(), a.tol, a.max_evals)?;
    let n = bvp.dim();
    if a.grid.0.len() != n {
        return Err(Failure::Usage(format!(
            "grid has {} axes, the problem has dimension {n}",
            a.grid.0.len()
        )));
    }
    let times = if bvp.class == PdeClass::Elliptic {
        vec![0.0]
    } else {
        a.times.0.clone()
    };
    let jobs: Vec<(Vec<f64>, f64)> = a
        .grid
        .points()
        .into_iter()
        .flat_map(|p| times.iter().map(move |&t| (p.clone(), t)))
        .collect();
    let values = jobs
        .par_iter()
        .map(|(x, t)| -> Result<f64, GreenError> {
            let point = Point::new(x.clone())?;
            match bvp.class {
                PdeClass::Elliptic => solve_elliptic(&bvp, &point, &quad),
                PdeClass::Parabolic => {
                    solve_parabolic(&bvp, &SpaceTimePoint::new(point, *t)?, &quad)
                }
                PdeClass::Hyperbolic => {
                    solve_wave_retarded(&bvp, &SpaceTimePoint::new(point, *t)?, &quad)
                }
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut s = String::new();
    let header: Vec<String> = (1..=n)
        .map(|i| format!("x{i}"))
        .chain(["t".into(), "value".into()])
        .collect();
    let _ = writeln!(s, "{}", header.join(","));
    for ((x, t), v) in jobs.iter().zip(values) {
        for c in x {
            let _ = write!(s, "{},", sci(*c));
        }
        let _ = writeln!(s, "{},{}", sci(*t), sci(v));
    }
    Ok(s)
}

fn mc(a: &McArgs) -> Result<String, Failure> {
    let bvp = read_problem(&a.problem)?;
    let cfg = WalkConfig::new(a.dt, a.eps, a.max_steps)?;
    let start = Point::new(a.at.0.clone())?;
    let estimate = match (a.quantity, bvp.class) {
        (Quantity::ExitTime, _) => {
            estimate_mean_exit_time(&bvp.domain, &start, a.walks, &cfg, a.seed)?
        }
        (Quantity::Solution, PdeClass::Elliptic) => {
            estimate_solution_elliptic(&bvp, &start, a.walks, &cfg, a.seed)?
        }
        (Quantity::Solution, PdeClass::Parabolic) => {
            let at = SpaceTimePoint::new(start.clone(), a.time)?;
            estimate_solution_parabolic(&bvp, &at, a.walks, &cfg, a.seed)?
        }
        (Quantity::Solution, PdeClass::Hyperbolic) => {
            return Err(Failure::Usage(
                "no Monte Carlo estimator for hyperbolic problems".into(),
            ));
        }
    };
    if let Some(path) = &a.per_walk {
        let records: Vec<Option<ExitRecord>> =
            if bvp.class == PdeClass::Parabolic && a.quantity == Quantity::Solution {
                sample_exits_em_censored(&bvp.domain, &start, a.walks, &cfg, a.seed, a.time)?
            } else {
                sample_exits_em(&bvp.domain, &start, a.walks, &cfg, a.seed)?
                    .into_iter()
                    .map(Some)
                    .collect()
            };
        let n = bvp.dim();
        let mut s = String::new();
        let header: Vec<String> = ["walk".to_string()]
            .into_iter()
            .chain((1..=n).map(|i| format!("x{i}")))
            .chain(["exit_time".into()])
            .collect();
        let _ = writeln!(s, "{}", header.join(","));
        for (i, r) in records.iter().enumerate() {
            let _ = write!(s, "{i}");
            match r {
                Some(r) => {
                    for c in r.exit_point.coords() {
                        let _ = write!(s, ",{}", sci(*c));
                    }
                    let _ = writeln!(s, ",{}", sci(r.exit_time));
                }
                None => {
                    let _ = writeln!(s, "{}", ",".repeat(n + 1));
                }
            }
        }
        std::fs::write(path, s)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(serde_json::to_string(&estimate)? + "\n")
}

fn verify(a: &VerifyArgs) -> Result<Outcome, Failure> {
    let report = match a.criterion {
        Some(id) => VerifyReport {
            suite: a.suite,
            seed: a.seed,
            criteria: vec![run_criterion(id as usize, a.suite, a.seed)?],
        },
        None => run_suite(a.suite, a.seed),
    };
    let body = match a.format {
        ReportFormat::Text => report.render(),
        ReportFormat::Json => serde_json::to_string_pretty(&report)? + "\n",
    };
    Ok(Outcome {
        body,
        diag: String::new(),
        code: if report.passed() {
            EXIT_OK
        } else {
            EXIT_VERIFY_FAILED
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(
            std::iter::once("greenpath").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn grid_points_last_axis_fastest() {
        let g: Grid = "0:1:3,-2".parse().unwrap();
        assert_eq!(
            g.points(),
            vec![vec![0.0, -2.0], vec![0.5, -2.0], vec![1.0, -2.0]]
        );
        let g: Grid = "0,1:2:2".parse().unwrap();
        assert_eq!(g.points(), vec![vec![0.0, 1.0], vec![0.0, 2.0]]);
        assert!("0:1".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
    }

    #[test]
    fn sci_has_seventeen_digits() {
        assert_eq!(sci(1.0), "1.0000000000000000e0");
        assert_eq!(sci(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn missing_source_point_is_usage_error() {
        let (code, _, err) = run_capture(&["kernel", "--domain", "free:3", "--x", "1,0,0"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--xp"));
    }

    #[test]
    fn wave_kernel_row() {
        let (code, out, _) = run_capture(&[
            "kernel", "--kernel", "wave-I", "--domain", "free:4", "--x", "0", "--width", "0.5",
        ]);
        assert_eq!(code, EXIT_OK);
        let fields: Vec<&str> = out.trim().split(',').collect();
        assert_eq!(&fields[..4], &["free:4", "dirichlet", "i", "4"]);
        let v: f64 = fields[5].parse().unwrap();
        let want = 2.0 / (0.5 * (2.0 * std::f64::consts::PI).sqrt());
        assert!((v - want).abs() < 1e-12, "{v} vs {want}");
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("verify"));
    }

    #[test]
    fn criterion_out_of_range() {
        let (code, ..) = run_capture(&["verify", "--criterion", "99"]);
        assert_eq!(code, EXIT_USAGE);
    }
}
