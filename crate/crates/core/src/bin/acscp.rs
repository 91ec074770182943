use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use acscp_core::harness::{
    export_field_snapshots, load_spec, parse_times, read_log, run_experiment, verify_log, write_outputs,
};
use acscp_core::harness::experiment::{efficiency_table, exposure_table};

#[derive(Parser)]
#[command(name = "acscp", version, about = "Coupled sensor reconfiguration and path planning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scheme × ratio × seed episode of an experiment spec.
    Run {
        /// TOML spec file of dotted keys.
        spec: PathBuf,
        /// Override a spec key, e.g. `--set noise.sigma_R=0.05`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory (overrides `experiment.output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Concurrent episodes (overrides `experiment.workers`).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Write gridded field, path and sensor files from an episode log.
    Snapshot {
        log: PathBuf,
        /// Comma-separated instants: `start`, `end` or tick numbers.
        #[arg(long, default_value = "start,end")]
        times: String,
        #[arg(long, default_value = "snapshots")]
        out: PathBuf,
    },
    /// Recompute an episode's metrics from its log and compare with the stored summary.
    Verify { log: PathBuf },
}

enum Failure {
    Lib(acscp_core::Error),
    Mismatch(Vec<String>),
}

impl From<acscp_core::Error> for Failure {
    fn from(e: acscp_core::Error) -> Self {
        Failure::Lib(e)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            spec,
            overrides,
            out,
            workers,
        } => {
            let mut spec = load_spec(&spec, &overrides)?;
            if let Some(out) = out {
                spec.output_dir = out;
            }
            if let Some(workers) = workers {
                spec.workers = workers;
            }
            let result = run_experiment(&spec)?;
            let written = write_outputs(&result, &spec.output_dir)?;
            print!("{}", exposure_table(&result));
            print!("{}", efficiency_table(&result));
            println!("wrote {} files under {}", written.len(), spec.output_dir.display());
        }
        Command::Snapshot { log, times, out } => {
            let times = parse_times(&times)?;
            let log = read_log(&log)?;
            for path in export_field_snapshots(&log, &times, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Verify { log } => {
            let log = read_log(&log)?;
            let report = verify_log(&log)?;
            if !report.is_ok() {
                return Err(Failure::Mismatch(report.mismatches));
            }
            let s = &report.recomputed;
            println!(
                "ok: S={} U={} incurred={} exposure={} eta={}",
                s.placements,
                s.unique_placements,
                s.incurred_cost,
                s.exposure.map_or("undefined".into(), |v| v.to_string()),
                s.efficiency.map_or("undefined".into(), |v| v.to_string()),
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
        Err(Failure::Mismatch(lines)) => {
            for line in &lines {
                eprintln!("error[verify]: {line}");
            }
            ExitCode::FAILURE
        }
    }
}
