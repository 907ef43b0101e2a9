//! `halo` — thresholds, scans, seeds, diagnostics and numerical verification
//! for halo bifurcations in the spatial circular restricted three-body
//! problem.

mod args;
mod cache;
mod commands;
mod sink;

use clap::Parser;

fn main() {
    let cli = args::Cli::parse();
    if let Err(err) = commands::run(&cli.command) {
        eprintln!("error: {err:#}");
        if args::targets_l3(&cli.command) {
            eprintln!(
                "hint: L3 is the delicate case: its detuning series diverges beyond second \
                 order and deep expansions at small mass ratios can trip the reality guard. \
                 Retry with --order 1 or 2 and the default degree, or use `halo verify` for \
                 the numerical value."
            );
        }
        std::process::exit(1);
    }
}
