use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use arrestflow::commands;
use arrestflow::config::load_config;

#[derive(Parser)]
#[command(name = "arrestflow", version, about = "Curvature flow with growth and nonlocal forcing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write time series, snapshots and events.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Use a single thread.
        #[arg(long)]
        serial: bool,
    },
    /// Distortion and embeddedness report for a snapshot file.
    Diagnose {
        snapshot: PathBuf,
        #[arg(long, default_value = "pseudo")]
        kernel: String,
        /// Report path; defaults to the snapshot path with `.report.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a kernel fragment.
    ValidateKernel { fragment: PathBuf },
    /// Self-convergence study in dt and M.
    Convergence {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
}

fn configure_threads(serial: bool) -> anyhow::Result<()> {
    let cap = match std::env::var("ARRESTFLOW_THREADS") {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .with_context(|| format!("ARRESTFLOW_THREADS must be an integer, got `{v}`"))?,
        ),
        Err(_) => None,
    };
    let threads = if serial || cap == Some(0) { Some(1) } else { cap };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            serial,
        } => {
            configure_threads(serial)?;
            let config = load_config(&config)?;
            let summary = commands::simulate(&config, &out)?;
            for e in &summary.events {
                println!("t={:.6} {} {}", e.t, e.kind.name(), e.detail);
            }
            println!("{} steps, output in {}", summary.steps, out.display());
            Ok(ExitCode::from(summary.exit_code() as u8))
        }
        Command::Diagnose {
            snapshot,
            kernel,
            out,
        } => {
            configure_threads(false)?;
            let out = out.unwrap_or_else(|| snapshot.with_extension("report.json"));
            let report = commands::diagnose(&snapshot, &kernel, &out)?;
            match report.delta_k {
                Some(d) => println!("delta_K = {d:.12}"),
                None => println!("delta_K unavailable"),
            }
            for reason in &report.unavailable {
                println!("note: {reason}");
            }
            println!("report written to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::ValidateKernel { fragment } => {
            let (_, report) = commands::validate_kernel(&fragment)?;
            print!("{report}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Convergence { config, levels } => {
            configure_threads(false)?;
            let config = load_config(&config)?;
            let table = commands::convergence(&config, levels)?;
            print!("{}", table.render());
            Ok(ExitCode::SUCCESS)
        }
    }
}
