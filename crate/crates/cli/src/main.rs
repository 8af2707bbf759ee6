//! `wwdtn`: experiments on the water-wave Dirichlet-to-Neumann operator.
//!
//! Exit status: 0 on success, 1 on numeric or i/o failure (and on failed
//! self-test items), 2 on invalid arguments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use commands::Cli;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.to_string();
            let line = rendered.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("wwdtn: {}", line.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match commands::run(cli, &argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("wwdtn: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
