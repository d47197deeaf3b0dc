mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quantbd_core::Error;

#[derive(Debug, Parser)]
#[command(name = "quantbd", version, about = "Quantization-aware block-diagonalization precoding simulator")]
struct Cli {
    /// Seed for every random draw; overrides the config file's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (defaults to the number of logical CPUs).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write CSV output to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep described by a JSON scenario file.
    Simulate(SimulateArgs),
    /// Tabulate quantizer parameters and SNR limits per bit depth.
    DeltaTable(DeltaTableArgs),
    /// Allocate power over a list of squared stream gains.
    Alloc(AllocArgs),
    /// Report precoder FLOP counts and converter power.
    Cost(CostArgs),
    /// Check the Bussgang decomposition by sampling a quantized precoder output.
    VerifyBussgang(VerifyArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Write each trial's channel to this directory and exit.
    #[arg(long, conflicts_with = "load_channels")]
    dump_channels: Option<PathBuf>,
    /// Read each trial's channel from this directory instead of drawing it.
    #[arg(long)]
    load_channels: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DeltaTableArgs {
    /// A bit depth (`4`), an inclusive range (`2..6`) or a list (`2,4,6`).
    #[arg(long, default_value = "2..6")]
    bits: String,
    #[arg(long, default_value_t = 64)]
    nb: usize,
    /// Receive antenna counts for the SNR limit columns.
    #[arg(long, value_delimiter = ',', default_values_t = [16, 32])]
    nu: Vec<usize>,
}

#[derive(Debug, Args)]
struct AllocArgs {
    /// Comma-separated squared gains, or a file holding them.
    #[arg(long)]
    phi2: String,
    /// Bit depth or `FR`.
    #[arg(long)]
    bits: String,
    #[arg(long)]
    snr_db: f64,
    /// Allocator name (EQUAL, WF, MAAS, MAAS-PRINTED).
    #[arg(long, default_value = "MAAS")]
    allocator: String,
    /// Receive antennas `N_u`; defaults to the number of streams.
    #[arg(long)]
    nu: Option<usize>,
    /// Power budget; defaults to `N_u`.
    #[arg(long)]
    p_total: Option<f64>,
    /// Transmit antennas used to size the quantizer.
    #[arg(long, default_value_t = 64)]
    nb: usize,
}

#[derive(Debug, Args)]
struct CostArgs {
    #[arg(long)]
    nb: usize,
    #[arg(long)]
    nu: usize,
    #[arg(long)]
    nj: usize,
    /// Resolution used for the Bussgang overhead of the quantization-aware kinds.
    #[arg(long, default_value_t = 5)]
    bits: u32,
    /// Count an I and a Q converter per antenna in the array totals.
    #[arg(long)]
    two_dacs: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 5)]
    bits: u32,
    #[arg(long, default_value_t = 64)]
    nb: usize,
    #[arg(long, default_value_t = 16)]
    nu: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
}

fn is_config_error(err: &anyhow::Error) -> bool {
    err.chain().any(|cause| {
        matches!(
            cause.downcast_ref::<Error>(),
            Some(
                Error::Config(_)
                    | Error::UnknownStrategy { .. }
                    | Error::DomainError(_)
                    | Error::Parse { .. }
                    | Error::InvalidDimensions(_)
                    | Error::EmptyProblem(_)
            )
        )
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_config_error(&e) { 2 } else { 1 })
        }
    }
}
