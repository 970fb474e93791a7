mod bench;
mod generate;
mod io;
mod reduce;
mod solve;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ofdma_core::UtilityKind;

use crate::io::exit_code_for;

/// Joint subcarrier and power allocation solvers for multi-user OFDMA systems.
#[derive(Debug, Parser)]
#[command(name = "ofdma", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Bisection width on the water level.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub eps: f64,

    /// Largest number of assignments, (K+1)^N, the exact solver enumerates.
    #[arg(long, global = true, default_value = "1e8", value_parser = io::parse_count)]
    pub enum_budget: u64,

    /// Largest N - K handled by partition enumeration.
    #[arg(long, global = true, default_value_t = 4)]
    pub c_bound: usize,

    /// Worker threads for parallel commands (default: one per core).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve an instance and report a verified allocation.
    Solve(solve::SolveArgs),
    /// Build a hardness gadget from a 3DM instance.
    Reduce(reduce::ReduceArgs),
    /// Check gadget answers against 3DM answers.
    Verify(verify::VerifyArgs),
    /// Generate seeded random instances.
    Gen(generate::GenArgs),
    /// Run a method matrix over an ensemble and write a CSV.
    Bench(bench::BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum VariantArg {
    Feasibility,
    FeasibilityC,
    Utility,
}

/// Shared by `reduce` and `verify`.
#[derive(Debug, Clone, Args)]
pub struct GadgetArgs {
    #[arg(long, value_enum, default_value = "feasibility")]
    pub variant: VariantArg,

    /// Subcarrier-to-user ratio as NUM/DEN.
    #[arg(long, default_value = "2/1", value_parser = io::parse_ratio)]
    pub c: (u64, u64),

    /// Utility for the utility variant.
    #[arg(long, default_value = "sum-rate")]
    pub utility: UtilityKind,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.global.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Solve(a) => solve::run(a, &cli.global),
        Command::Reduce(a) => reduce::run(a),
        Command::Verify(a) => verify::run(a, &cli.global),
        Command::Gen(a) => generate::run(a),
        Command::Bench(a) => bench::run(a, &cli.global),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

pub fn default_sidecar(out: &std::path::Path) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.sidecar.json"))
}
