//! Runs every acceptance criterion at full size and prints one PASS/FAIL
//! line per criterion. Exits non-zero if any criterion fails.

use greenpath::verify::{run_criterion, Suite, CRITERIA};

const SEED: u64 = 20_240_601;

fn main() {
    let mut failed = Vec::new();
    for id in 1..=CRITERIA {
        let report = run_criterion(id, Suite::Full, SEED).expect("criterion ids are in range");
        println!("{}", report.render());
        if !report.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {CRITERIA} criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
