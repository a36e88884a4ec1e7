//! `ewd` — command-line front end for exponentiated-Weibull lifetime
//! modelling under type II censoring: fitting, hazard-shape classification,
//! likelihood-surface grids and Monte Carlo coverage studies.
//!
//! Structured results go to stdout as JSON; grid and curve data are written
//! as CSV files. Exit codes are a stable contract: 0 success, 1 usage
//! error, 2 data error, 3 numerical/non-convergence error.

mod commands;
mod report;

use clap::Parser;

fn main() {
    let cli = commands::Cli::parse();
    match commands::run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("{}", e.to_json());
            std::process::exit(e.exit_code());
        }
    }
}
