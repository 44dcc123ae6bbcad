//! `covlab`: best-covering and polarization experiments from JSON configs.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::json;

use config::{Command, ConfigError, ExperimentConfig};

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "covlab", version, about = "Best-covering and Riesz polarization experiments")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment configuration; optional for `verify`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output`, then `covlab-out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn invalid(e: &ConfigError) -> ExitCode {
    eprintln!("{}", json!({ "error": "invalid_config", "path": e.path, "message": e.message }));
    ExitCode::from(EXIT_INVALID)
}

fn configure_threads() -> Result<usize, ConfigError> {
    let Ok(v) = std::env::var("COVLAB_THREADS") else { return Ok(rayon::current_num_threads()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| ConfigError::new("$COVLAB_THREADS", format!("expected a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError::new("$COVLAB_THREADS", e))?;
    Ok(n)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let threads = match configure_threads() {
        Ok(n) => n,
        Err(e) => return invalid(&e),
    };
    let mut cfg = match &cli.config {
        Some(p) => match config::load(p) {
            Ok(c) => c,
            Err(e) => return invalid(&e),
        },
        None if cli.command == Command::Verify => config::parse("{}").expect("empty config"),
        None => return invalid(&ConfigError::new("--config", "required for this command")),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let model = match cfg.validate(cli.command) {
        Ok(m) => m,
        Err(e) => return invalid(&e),
    };
    let out_dir = cli.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("covlab-out"));
    let t0 = Instant::now();
    let result = match run::run(cli.command, &cfg, model) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{}", json!({ "error": "run_failed", "message": e.to_string() }));
            return ExitCode::from(EXIT_FAILURE);
        }
    };
    let wall = t0.elapsed().as_secs_f64();
    let written = match output::write_run(&out_dir, &result.records, &result.extra, &result.report) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("{}", json!({ "error": "write_failed", "message": e.to_string() }));
            return ExitCode::from(EXIT_FAILURE);
        }
    };
    let manifest = manifest(&cli, &cfg, &result, &written, wall, threads);
    if let Err(e) = output::write_json(&out_dir.join("manifest.json"), &manifest) {
        eprintln!("{}", json!({ "error": "write_failed", "message": e.to_string() }));
        return ExitCode::from(EXIT_FAILURE);
    }
    println!("{} {} in {wall:.2}s -> {}", cli.command, if result.passed { "passed" } else { "failed" }, out_dir.display());
    if result.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILURE)
    }
}

fn manifest(
    cli: &Cli,
    cfg: &ExperimentConfig,
    result: &run::RunOutput,
    written: &output::Written,
    wall: f64,
    threads: usize,
) -> serde_json::Value {
    let records: Vec<_> = result
        .records
        .iter()
        .map(|r| json!({ "N": r.n, "exact": r.exact, "mesh_certificate": r.mesh_certificate }))
        .collect();
    json!({
        "command": cli.command,
        "seed": cfg.seed,
        "config": cfg,
        "versions": { "covlab": env!("CARGO_PKG_VERSION"), "covlab_core": covlab_core::VERSION },
        "threads": threads,
        "wall_seconds": wall,
        "passed": result.passed,
        "files": written.files,
        "records": records,
    })
}
