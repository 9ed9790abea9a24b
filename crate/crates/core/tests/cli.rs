use std::io::Write;

use greenpath::cli::{run_with, EXIT_IO, EXIT_OK, EXIT_USAGE};

fn run(args: &[&str]) -> (i32, String, String) {
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

fn last_values(row: &str) -> (f64, f64) {
    let f: Vec<&str> = row.trim().split(',').collect();
    (
        f[f.len() - 2].parse().unwrap(),
        f[f.len() - 1].parse().unwrap(),
    )
}

#[test]
fn ball_green_row() {
    let (code, out, _) = run(&[
        "kernel",
        "--kernel",
        "green",
        "--domain",
        "ball:3:1",
        "--bc",
        "dirichlet",
        "--x",
        "0.5,0,0",
        "--xp",
        "0,0,0",
    ]);
    assert_eq!(code, EXIT_OK);
    let row = out.lines().next().unwrap();
    assert!(row.starts_with("ball:3:1,dirichlet,1,3,"));
    let (re, im) = last_values(row);
    assert!((re - 1.0).abs() < 1e-15);
    assert_eq!(im, 0.0);
}

#[test]
fn unknown_domain_is_usage_error() {
    let (code, out, err) = run(&[
        "kernel", "--domain", "pentagon", "--x", "0,0", "--xp", "1,1",
    ]);
    assert_eq!(code, EXIT_USAGE);
    assert!(out.is_empty());
    assert!(err.contains("pentagon"));
}

#[test]
fn unknown_flag_is_rejected() {
    assert_eq!(run(&["verify", "--bogus"]).0, EXIT_USAGE);
    assert_eq!(run(&[]).0, EXIT_USAGE);
}

#[test]
fn verify_fast_is_deterministic() {
    let (c1, a, _) = run(&["verify", "--suite", "fast", "--seed", "42"]);
    let (c2, b, _) = run(&[
        "--threads",
        "2",
        "verify",
        "--suite",
        "fast",
        "--seed",
        "42",
    ]);
    assert_eq!(c1, c2);
    assert_eq!(a, b);
    assert_eq!(
        a.lines()
            .filter(|l| l.starts_with("PASS") || l.starts_with("FAIL"))
            .count(),
        14
    );
    assert_eq!(c1, EXIT_OK, "{a}");
}

#[test]
fn schrodinger_modulus() {
    let (code, out, _) = run(&[
        "kernel",
        "--kernel",
        "schrodinger",
        "--domain",
        "free:2",
        "--x",
        "0.3,0.1",
        "--xp",
        "-1,2",
        "--dt",
        "0.25",
    ]);
    assert_eq!(code, EXIT_OK);
    let (re, im) = last_values(&out);
    assert!(((re * re + im * im).sqrt() - 4.0).abs() < 1e-12);
    assert!(out.starts_with("free:2,dirichlet,i,2,"));
}

#[test]
fn multiple_points_give_multiple_rows() {
    let (code, out, _) = run(&[
        "kernel",
        "--kernel",
        "heat",
        "--domain",
        "halfspace:1",
        "--x",
        "0.5",
        "--x",
        "1",
        "--xp",
        "0.7",
        "--dt",
        "1",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 2);
}

#[test]
fn solve_and_mc_from_problem_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("erf.toml");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "domain = \"halfspace:1\"\nclass = \"parabolic\"\n\n[boundary]\nexpr = \"1\"\n\n[initial]\nexpr = \"0\"").unwrap();
    let p = path.to_str().unwrap();

    let (code, out, err) = run(&["solve", "--problem", p, "--grid", "1", "--times", "1"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "x1,t,value");
    let v: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    let want = 1.0 - statrs::function::erf::erf(std::f64::consts::PI.sqrt());
    assert!((v - want).abs() < 1e-7);

    let csv = dir.path().join("walks.csv");
    let args = [
        "mc",
        "--problem",
        p,
        "--at",
        "1",
        "--time",
        "1",
        "--walks",
        "500",
        "--dt",
        "1e-3",
        "--seed",
        "9",
    ];
    let (code, out, _) = run(&[&args[..], &["--per-walk", csv.to_str().unwrap()]].concat());
    assert_eq!(code, EXIT_OK);
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json["n"], 500);
    assert_eq!(json["seed"], 9);
    assert!(json["mean"].as_f64().unwrap() >= 0.0);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 501);
    let (_, again, _) = run(&[
        "--threads",
        "3",
        "mc",
        "--problem",
        p,
        "--at",
        "1",
        "--time",
        "1",
        "--walks",
        "500",
        "--dt",
        "1e-3",
        "--seed",
        "9",
    ]);
    assert_eq!(out, again);
}

#[test]
fn missing_problem_file_is_io_error() {
    let (code, _, err) = run(&["solve", "--problem", "/nonexistent/p.toml", "--grid", "0"]);
    assert_eq!(code, EXIT_IO);
    assert!(err.contains("cannot read"));
}

#[test]
fn output_file_target() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.csv");
    let (code, out, _) = run(&[
        "kernel",
        "--domain",
        "quadrant",
        "--x",
        "1,1",
        "--xp",
        "2,1",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    let (re, _) = last_values(&std::fs::read_to_string(&path).unwrap());
    assert!((re - (45.0f64 / 13.0).ln()).abs() < 1e-14);
}
