//! One line per acceptance criterion; exits nonzero if any fails.

use std::process::ExitCode;

use selfmap_chow::selfcheck::{run_all, Level};

fn main() -> ExitCode {
    let reports = run_all(Level::Quick);
    assert_eq!(reports.len(), 9);
    let mut failed = Vec::new();
    for (number, report) in (1..).zip(&reports) {
        let status = if report.passed() { "PASS" } else { "FAIL" };
        println!("criterion {number} [{}]: {status} ({} checks, {:.2}s)", report.name, report.checks, report.seconds);
        for failure in report.failures.iter().take(5) {
            println!("    {failure}");
        }
        if !report.passed() {
            failed.push(number);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
