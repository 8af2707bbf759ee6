//! Runs every acceptance criterion and prints one PASS/FAIL line per item.
//! Exits nonzero when any criterion fails.

use std::process::ExitCode;

use wwdtn::acceptance::run_all;
use wwdtn::Exec;

fn main() -> ExitCode {
    let records = run_all(Exec::default());
    for r in &records {
        println!("{r}");
    }
    let failed = records.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} passed, {failed} failed", records.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
