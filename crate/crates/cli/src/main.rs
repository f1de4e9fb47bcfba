use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use snse_core::commands::{run_command, Command};
use snse_core::config::parse_config;
use snse_core::io::log_error;
use snse_core::SnseError;

#[derive(Parser, Debug)]
#[command(name = "snse", version, about = "Stochastic Navier-Stokes cascade simulator on the 3-torus")]
struct Cli {
    /// Configuration file (flat dotted keys).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the `seed` key.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the `output.dir` key.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Only print warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Split the initial data into cascade levels.
    Decompose,
    /// Run the untruncated equation directly.
    Simulate,
    /// Run the truncated cascade and detect hitting times.
    Cascade,
    /// Picard iteration on one level.
    Picard,
    /// Monte Carlo ensemble over realizations.
    Ensemble,
    /// Combine ensemble directories run with the same configuration.
    Merge {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
    /// Check the invariants of every module.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let command = match cli.command {
        Sub::Decompose => Command::Decompose,
        Sub::Simulate => Command::Simulate,
        Sub::Cascade => Command::Cascade,
        Sub::Picard => Command::Picard,
        Sub::Ensemble => Command::Ensemble,
        Sub::Merge { dirs } => Command::Merge(dirs),
        Sub::Verify => Command::Verify,
    };
    let fallback_out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let fail = |e: SnseError, dir: &PathBuf| {
        log::error!("{e}");
        if let Err(io) = log_error(dir, command.name(), &e) {
            log::error!("could not write the error log: {io}");
        }
        ExitCode::from(2)
    };

    let text = match &cli.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => return fail(e.into(), &fallback_out),
        },
        None if command == Command::Verify => "data.eps0 = 0.001\n".to_string(),
        None => return fail(SnseError::Config(vec!["--config is required".into()]), &fallback_out),
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => return fail(e, &fallback_out),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.to_string_lossy().into_owned();
    }
    let out = PathBuf::from(&cfg.output_dir);

    if let Some(n) = std::env::var("SNSE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("SNSE_THREADS ignored: {e}");
        }
    }

    match run_command(&command, &cfg, &out) {
        Ok(outcome) if outcome.ok => {
            log::info!("{} finished; outputs in {}", command.name(), out.display());
            ExitCode::SUCCESS
        }
        Ok(_) => {
            log::error!("{} reported failing checks", command.name());
            ExitCode::FAILURE
        }
        Err(e) => fail(e, &out),
    }
}
