//! `rellich`: batch front end. Exit status 0 when every check passes, 1 when
//! any check misses its tolerance, 2 on usage or I/O errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod run;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use config::{Cli, RunConfig};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    let cfg = match RunConfig::from_cli(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run::run(&cfg) {
        Ok(s) => {
            eprintln!("{} checks, {} failed", s.checks, s.failed);
            if s.failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
