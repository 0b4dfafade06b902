use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cma_core::config::{parse_config, Mode};
use cma_core::run::{run, EXIT_INPUT};

/// Solve and verify degenerate complex Monge-Ampère equations on a grid.
#[derive(Parser, Debug)]
#[command(name = "cma", version)]
struct Cli {
    /// One of: solve-dirichlet, solve-compact, continue-to-zero,
    /// envelope-sup, envelope-inf, project-psh, balayage, check-sub,
    /// check-super, compare, stability.
    mode: String,
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed recorded in certificates (overrides `seed` in the config).
    #[arg(long)]
    seed: Option<u64>,
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("CMA_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("CMA_THREADS must be a nonnegative integer, got `{v}`"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let fail = |msg: String| {
        eprintln!("cma: {msg}");
        ExitCode::from(EXIT_INPUT as u8)
    };
    if let Err(e) = init_threads() {
        return fail(e);
    }
    let mode: Mode = match cli.mode.parse() {
        Ok(m) => m,
        Err(e) => return fail(e.to_string()),
    };
    let text = match &cli.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => return fail(format!("{}: {e}", p.display())),
        },
        None => String::new(),
    };
    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => return fail(e.to_string()),
    };
    if let Some(dir) = cli.config.as_ref().and_then(|p| p.parent()) {
        config.resolve_paths(dir);
    }
    if config.mode.is_some_and(|m| m != mode) {
        return fail(format!("config file sets mode `{}` but `{mode}` was requested", config.mode.unwrap()));
    }
    config.mode = Some(mode);
    if let Some(out) = cli.out {
        config.output = Some(out);
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    ExitCode::from(run(&config) as u8)
}
