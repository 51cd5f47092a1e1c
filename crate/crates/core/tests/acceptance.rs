//! Acceptance run: every criterion at its stated tolerance, one line each.
//! Exits nonzero if any criterion fails.

use ballwalk::verify::{self, VerifyOptions, CRITERIA};
use std::time::Instant;

fn main() {
    let opts = VerifyOptions::default();
    let mut failures = Vec::new();
    for id in 1..=CRITERIA {
        let started = Instant::now();
        let check = verify::run_check(id, &opts).expect("criterion id is in range");
        println!("{} [{:.1} s]", check.line(), started.elapsed().as_secs_f64());
        if !check.passed() {
            failures.push(id);
        }
    }
    println!("acceptance: {} of {CRITERIA} passed (seed {})", CRITERIA - failures.len(), opts.seed);
    if !failures.is_empty() {
        println!("acceptance: failed criteria {failures:?}");
        std::process::exit(1);
    }
}
