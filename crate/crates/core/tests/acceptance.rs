//! The full acceptance suite at production sample sizes. Runs without the
//! libtest harness so every PASS/FAIL line reaches the terminal; exits
//! nonzero if any check fails.

use std::process::ExitCode;

use parafermion::verify::{run_check, VerifyConfig, CHECK_COUNT};

fn main() -> ExitCode {
    let cfg = VerifyConfig::default();
    let mut failed = Vec::new();
    for id in 1..=CHECK_COUNT {
        let check = run_check(id, &cfg).expect("known check");
        println!("{}", check.line());
        if !check.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: {CHECK_COUNT} of {CHECK_COUNT} checks passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed checks {failed:?}");
        ExitCode::FAILURE
    }
}
