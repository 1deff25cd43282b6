//! `kpzlab`: reproducible experiments on lattice Burgers / KPZ / heat
//! dynamics.
//!
//! Every subcommand reads a JSON configuration, runs deterministically from
//! its seed, and writes a report whose non-metadata content is byte-stable
//! across reruns. Exit codes: 0 success, 1 internal error or failed
//! `--check`, 2 blow-up, 3 configuration rejected. Replica parallelism can
//! be capped with the `KPZLAB_THREADS` environment variable.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CmdError, CmdResult};

#[derive(Parser)]
#[command(name = "kpzlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Exit nonzero if any built-in check fails.
    #[arg(long)]
    check: bool,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for reports and data files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and persist it.
    Simulate(Common),
    /// Invariant-measure statistics for an ensemble of replicas.
    Invariance(Common),
    /// Deterministic constants: correction, renormalization, vertex bounds,
    /// zero-chaos sums, cancellation.
    Constants(Common),
    /// Besov regularity regression over a field ensemble.
    Regularity(Common),
    /// Matched-noise exp-height/heat consistency under dt refinement.
    ColeHopf(Common),
    /// Feynman-Kac Monte Carlo against the spectral solve.
    FeynmanKac(Common),
}

fn dispatch(cmd: &Command) -> (&'static str, &Common, CmdResult) {
    match cmd {
        Command::Simulate(c) => ("simulate", c, commands::simulate(&c.config, c.seed, &c.out)),
        Command::Invariance(c) => (
            "invariance",
            c,
            commands::invariance(&c.config, c.seed, &c.out),
        ),
        Command::Constants(c) => (
            "constants",
            c,
            commands::constants(&c.config, c.seed, &c.out),
        ),
        Command::Regularity(c) => (
            "regularity",
            c,
            commands::regularity(&c.config, c.seed, &c.out),
        ),
        Command::ColeHopf(c) => (
            "cole-hopf",
            c,
            commands::cole_hopf(&c.config, c.seed, &c.out),
        ),
        Command::FeynmanKac(c) => (
            "feynman-kac",
            c,
            commands::feynman_kac(&c.config, c.seed, &c.out),
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common, result) = dispatch(&cli.command);
    match result {
        Ok(output) => {
            match output.report.write(&common.out) {
                Ok(path) => println!("{name}: report written to {}", path.display()),
                Err(e) => {
                    eprintln!("{name}: cannot write report: {e:#}");
                    return ExitCode::from(1);
                }
            }
            for check in &output.report.checks {
                println!(
                    "  [{}] {} — {}",
                    if check.pass { "pass" } else { "FAIL" },
                    check.name,
                    check.detail
                );
            }
            if let Some(tau) = output.blew_up {
                eprintln!("{name}: trajectory blew up at t = {tau}");
                return ExitCode::from(2);
            }
            if common.check && !output.report.all_pass() {
                eprintln!("{name}: --check requested and at least one check failed");
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(CmdError::Config(e)) => {
            eprintln!("{name}: configuration rejected: {e:#}");
            ExitCode::from(3)
        }
        Err(CmdError::Internal(e)) => {
            eprintln!("{name}: error: {e:#}");
            ExitCode::from(1)
        }
    }
}
