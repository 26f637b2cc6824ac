//! Thin CLI over the library harness.
//!
//! Any flag of the form `--section.key=value` overrides the matching
//! config entry (e.g. `--channel.snr_db=12`). Exit codes: 0 success,
//! 2 configuration/input error, 3 pipeline diagnostic failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cmasense::harness::{self, CaptureFormat, ExperimentConfig};
use cmasense::Error;

#[derive(Parser)]
#[command(name = "cmasense", version, about = "Fixed-point CMA equalizer / SOP sensing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the float reference plus the configured bit-width sweep on one
    /// channel realization and write the artifact tree.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Repeat `simulate` over consecutive seeds and aggregate statistics.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        repeat: usize,
        /// Parallel seeds (defaults to the number of cpus).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Validate a captured IQ file and convert it to the canonical
    /// binary frame format.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// f32x4 (interleaved XI,XQ,YI,YQ little-endian floats) or csv.
        #[arg(long, default_value = "f32x4")]
        format: String,
        /// Input rate as a rational samples-per-symbol: numerator.
        #[arg(long, default_value_t = 2)]
        sps_num: usize,
        #[arg(long, default_value_t = 1)]
        sps_den: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Emit plot data and a markdown table from a simulate output tree.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
}

fn load_config(
    config: Option<&PathBuf>,
    seed: Option<u64>,
    output: Option<&PathBuf>,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig, Error> {
    let mut cfg = harness::load_with_overrides(config.map(|p| p.as_path()), overrides)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(out) = output {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn parse_format(name: &str) -> Result<CaptureFormat, Error> {
    match name {
        "f32x4" => Ok(CaptureFormat::F32x4),
        "csv" => Ok(CaptureFormat::Csv),
        other => Err(Error::config(format!(
            "unknown capture format `{other}` (use f32x4 or csv)"
        ))),
    }
}

fn run() -> Result<(), Error> {
    let raw: Vec<String> = std::env::args().collect();
    let (args, overrides) = harness::split_override_args(&raw);
    let cli = Cli::parse_from(args);

    match cli.command {
        Command::Simulate { config, seed, output } => {
            let cfg = load_config(config.as_ref(), seed, output.as_ref(), &overrides)?;
            let report = harness::cmd_simulate(&cfg)?;
            harness::print_report(&report, std::io::stdout().lock())
                .map_err(|e| Error::io("stdout".to_string(), e))?;
            println!("artifacts in {}", cfg.output_dir.display());
        }
        Command::Sweep { config, seed, output, repeat, jobs } => {
            let cfg = load_config(config.as_ref(), seed, output.as_ref(), &overrides)?;
            let jobs = jobs.unwrap_or_else(num_cpus);
            let sweep = harness::cmd_sweep(&cfg, repeat, jobs, true)?;
            for row in &sweep.rows {
                println!(
                    "{:>6}: n={} EVM {:.4}+/-{:.4}  Q {:.2}+/-{:.2} dB  rmse {:.3}+/-{:.3} deg  floor {:.2}+/-{:.2} dB  tone {}/{}",
                    row.label, row.n_ok, row.evm_mean, row.evm_std, row.q_db_mean, row.q_db_std,
                    row.rmse_mean, row.rmse_std, row.floor_db_mean, row.floor_db_std,
                    row.tone_hits, row.n_ok,
                );
            }
            println!("artifacts in {}", cfg.output_dir.display());
        }
        Command::Ingest { input, format, sps_num, sps_den, output } => {
            if sps_num == 0 || sps_den == 0 {
                return Err(Error::config("sps numerator/denominator must be nonzero"));
            }
            let fmt = parse_format(&format)?;
            let frame = harness::ingest_frame(&input, fmt, sps_num as f64 / sps_den as f64)?;
            harness::export_frame(&output, CaptureFormat::F32x4, &frame)?;
            println!(
                "{} samples at {}/{} sa/sy, mean power {:.4} -> {}",
                frame.len(),
                sps_num,
                sps_den,
                frame.mean_power(),
                output.display()
            );
        }
        Command::Report { run } => {
            let written = harness::cmd_report(&run)?;
            for path in written {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn num_cpus() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
