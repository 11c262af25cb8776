//! `nfbeam`: file-based front end to the near-field analyses.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or invalid input,
//! 3 numeric failure (for example a singular zero-forcing channel).

mod args;
mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "nfbeam", version, about = "Near-field beam focusing with discrete phase shifters")]
struct Cli {
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Beam-pattern magnitude over an angle × range grid.
    Beampattern(commands::BeampatternArgs),
    /// Closed-form lobe metrics of a near-field beamformer.
    Lobes(commands::LobesArgs),
    /// Far-field lobe metrics and the pattern on the far-field ring.
    Farfield(commands::FarfieldArgs),
    /// Fourier coefficients of the effective quantizer.
    Fourier(commands::FourierArgs),
    /// Main-lobe power ratio versus resolution.
    Eta(commands::EtaArgs),
    /// Array-of-subarrays partition of a quantized beamformer.
    Subarrays(commands::SubarraysArgs),
    /// Monte Carlo sum rate and energy efficiency.
    Multiuser(commands::MultiuserArgs),
    /// Energy-efficiency sweeps over transmit power and user count.
    Ee(commands::EeArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use nearfield::Error as E;
    if err.downcast_ref::<args::UsageError>().is_some() {
        return 2;
    }
    if let Some(e) = err.downcast_ref::<E>() {
        return match e {
            E::SingularChannel(..) | E::ZeroRingDifference => 3,
            E::Csv(_) => 1,
            _ => 2,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() || err.downcast_ref::<serde_json::Error>().is_some() {
        return 1;
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let out = cli.out.as_path();
    let result = match &cli.command {
        Command::Beampattern(a) => commands::beampattern(a, out),
        Command::Lobes(a) => commands::lobes(a, out),
        Command::Farfield(a) => commands::farfield(a, out),
        Command::Fourier(a) => commands::fourier(a, out),
        Command::Eta(a) => commands::eta(a, out),
        Command::Subarrays(a) => commands::subarrays(a, out),
        Command::Multiuser(a) => commands::multiuser(a, out),
        Command::Ee(a) => commands::ee(a, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
