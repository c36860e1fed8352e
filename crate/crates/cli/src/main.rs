use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lattice_kms_cli::{run, validate, CliError, RunOptions};

#[derive(Parser)]
#[command(
    name = "lattice-kms",
    version,
    about = "Run lattice-kms experiments from TOML configurations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment and write its results.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output.path`.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Worker threads for parallel sweeps.
        #[arg(long, env = "LATTICE_KMS_THREADS")]
        threads: Option<usize>,
        /// Seed, overriding `seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a configuration without running it.
    Validate { config: PathBuf },
}

fn report(e: &CliError) -> ExitCode {
    let record = serde_json::to_string(&e.record()).unwrap_or_else(|_| e.to_string());
    eprintln!("{record}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            output,
            threads,
            seed,
        } => match run(
            &config,
            &RunOptions {
                output,
                threads,
                seed,
            },
        ) {
            Ok(summary) => {
                for f in &summary.files {
                    println!("{}", summary.output_dir.join(f).display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => report(&e),
        },
        Command::Validate { config } => match validate(&config) {
            Ok(cfg) => {
                println!("ok: {} (sha256 {})", cfg.experiment, cfg.hash());
                ExitCode::SUCCESS
            }
            Err(e) => report(&e),
        },
    }
}
