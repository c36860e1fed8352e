//! Configuration-driven batch runner for the `lattice_kms` library.
//!
//! A run reads a TOML experiment file, validates it, executes the
//! experiment and writes a result table, an optional plot-ready curve and a
//! `run_manifest.json` into the output directory.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

pub use config::ExperimentConfig;
pub use error::CliError;
use output::{write_file, write_results, Provenance};

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "run_manifest.json";
pub const ERROR_FILE: &str = "error.json";

/// Command-line overrides applied on top of the configuration file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<String>,
    pub config_sha256: String,
}

/// Reads, parses and validates a configuration file.
pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let cfg = ExperimentConfig::parse(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn validate(path: &Path) -> Result<ExperimentConfig, CliError> {
    load(path)
}

pub fn run(path: &Path, opts: &RunOptions) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(dir) = &opts.output {
        cfg.output.path = dir.clone();
    }
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let dir = cfg.output.path.clone();
    let result = execute(&cfg, opts, start);
    if let Err(e) = &result {
        // best effort: the error is also reported by the caller
        if let Ok(body) = serde_json::to_string_pretty(&e.record()) {
            let _ = write_file(&dir, ERROR_FILE, &(body + "\n"));
        }
    }
    result
}

fn execute(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    start: Instant,
) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    if let Some(n) = opts.threads {
        if n == 0 {
            return Err(CliError::Validation {
                field: Some("threads".into()),
                message: "must be positive".into(),
            });
        }
        // the global pool can only be set once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let results = experiments::run_experiment(cfg)?;
    let prov = Provenance {
        experiment: cfg.experiment.name().to_string(),
        config_sha256: cfg.hash(),
        library_version: LIBRARY_VERSION.to_string(),
        seed: cfg.seed,
    };
    let dir = cfg.output.path.clone();
    let _ = fs::remove_file(dir.join(ERROR_FILE));
    let mut files = write_results(&dir, cfg.output.format, &results, &prov)?;
    let manifest = json!({
        "experiment": prov.experiment,
        "config": cfg,
        "config_sha256": prov.config_sha256,
        "library_version": prov.library_version,
        "seed": cfg.seed,
        "threads": rayon::current_num_threads(),
        "outputs": files,
        "wall_time_seconds": start.elapsed().as_secs_f64(),
    });
    let body = serde_json::to_string_pretty(&manifest).expect("manifest encodes") + "\n";
    write_file(&dir, MANIFEST_FILE, &body)?;
    files.push(MANIFEST_FILE.to_string());
    Ok(RunSummary {
        output_dir: dir,
        files,
        config_sha256: prov.config_sha256,
    })
}
