//! Numbered acceptance criteria at their published sizes and tolerances.
//!
//! Runs without the libtest harness so the PASS/FAIL table is always printed.
//! Set `INFOVAL_ACCEPTANCE=quick` for a reduced Monte Carlo run.

use std::process::ExitCode;
use std::time::Instant;

use infoval::validation::{run_criterion, SuiteScale};

fn main() -> ExitCode {
    let scale = match std::env::var("INFOVAL_ACCEPTANCE").as_deref() {
        Ok("quick") => SuiteScale::quick(),
        _ => SuiteScale::full(),
    };
    println!("acceptance suite: {scale:?}");
    let mut failed = Vec::new();
    for id in 1..=10u8 {
        let start = Instant::now();
        let c = run_criterion(id, &scale);
        print!("{c}");
        println!("    elapsed {:.1} s", start.elapsed().as_secs_f64());
        if !c.passed() {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: 10/10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
