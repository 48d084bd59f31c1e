//! Runs the full acceptance battery and prints one PASS/FAIL line per
//! criterion. Built without the test harness so the lines always show.

use std::process::ExitCode;

use crtool::verify::{run_criterion, VerifyOptions};

fn main() -> ExitCode {
    let opts = VerifyOptions::default();
    let mut failed = Vec::new();
    for id in 1..=10 {
        let Some(report) = run_criterion(id, &opts) else {
            println!("FAIL [{id:>2}] missing criterion");
            failed.push(id);
            continue;
        };
        println!("{report}");
        if !report.pass {
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
