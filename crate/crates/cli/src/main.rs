//! Command-line driver for the lattice-clock density-shift simulator.
//!
//! Exit codes: 0 success, 1 invalid input, 2 finished with rows below the
//! requested precision, 3 internal numerical failure.

mod commands;
mod output;
mod recipes;
mod svg;

use clap::Parser;

fn main() {
    let cli = match commands::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(commands::run(cli));
}
