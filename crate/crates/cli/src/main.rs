//! `ldpustat`: command-line front end for U/V-statistics, variational
//! limits and finite-n Gibbs oracles. Prints JSON to stdout and, with
//! `--out DIR`, writes the same JSON plus CSV artifacts there.
//!
//! Exit codes: 0 success, 1 failed check or computation, 2 bad input.

mod cmd_gibbs;
mod cmd_kernel;
mod cmd_solve;
mod cmd_ustat;
mod cmd_verify;
mod inputs;
mod opts;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use opts::Opts;

/// Input problem detected by the front end itself.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

#[derive(Parser)]
#[command(name = "ldpustat", version, about = "U/V-statistics, mean-field limits and Gibbs oracles")]
struct Cli {
    /// TOML file supplying any flag by name; flags given on the command
    /// line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cut norms, L^r norms, degree profiles and regularity checks.
    Kernel {
        #[arg(value_enum)]
        op: cmd_kernel::Op,
        #[command(flatten)]
        opts: Opts,
    },
    /// Evaluate U/V-statistics, local fields and the Hölder bound.
    Ustat {
        #[arg(value_enum)]
        op: cmd_ustat::Op,
        #[command(flatten)]
        opts: Opts,
    },
    /// Variational limits: Z(θ), rate curves and constrained rates.
    Solve {
        #[arg(value_enum)]
        op: cmd_solve::Op,
        #[command(flatten)]
        opts: Opts,
    },
    /// Finite-n Gibbs measures: enumeration, sampling, integration, tails.
    Gibbs {
        #[arg(value_enum)]
        op: cmd_gibbs::Op,
        #[command(flatten)]
        opts: Opts,
    },
    /// End-to-end checks with a pass/fail summary.
    Verify {
        #[arg(value_enum)]
        scenario: cmd_verify::Scenario,
        #[command(flatten)]
        opts: Opts,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use ldpustat::Error as E;
    for cause in err.chain() {
        if cause.is::<std::io::Error>() || cause.is::<InputError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::NotConverged { .. } | E::StateSpaceTooLarge { .. } | E::TableTooLarge { .. } | E::TooManyBlocks { .. } => 1,
                _ => 2,
            };
        }
    }
    1
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("LDPUSTAT_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| InputError(format!("LDPUSTAT_THREADS='{v}' is not a count")))?;
        if n > 0 {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    configure_threads()?;
    let cfg = cli.config.as_deref();
    match cli.command {
        Command::Kernel { op, opts } => cmd_kernel::run(op, &opts.merged(cfg)?),
        Command::Ustat { op, opts } => cmd_ustat::run(op, &opts.merged(cfg)?),
        Command::Solve { op, opts } => cmd_solve::run(op, &opts.merged(cfg)?),
        Command::Gibbs { op, opts } => cmd_gibbs::run(op, &opts.merged(cfg)?),
        Command::Verify { scenario, opts } => cmd_verify::run(scenario, &opts.merged(cfg)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
