use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use sitepair::config::{RunConfig, Task};
use sitepair::pipeline;

/// Two atoms in one optical-lattice site: spectra, densities, cuts and
/// Feshbach maps from a single configuration file.
#[derive(Parser, Debug)]
#[command(name = "sitepair", version)]
struct Cli {
    /// Configuration file (TOML, or JSON with a .json extension).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the task in the configuration.
    #[arg(long)]
    task: Option<Task>,
    /// Output directory; overrides [output] dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.verbose { "debug" } else { "warn" }))
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    let (cfg, text) = match RunConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let task = cli.task.unwrap_or(cfg.task);
    let out = match cli.out.or_else(|| cfg.output.as_ref().map(|o| o.dir.clone())) {
        Some(d) => d,
        None => {
            eprintln!("error: no output directory (use --out or [output] dir)");
            return ExitCode::from(2);
        }
    };
    match pipeline::run(&cfg, &text, task, &out) {
        Ok(summary) => {
            for (name, hash) in &summary.manifest.artifacts {
                log::info!("{name} {hash}");
            }
            println!("{} artifacts written to {}", summary.manifest.artifacts.len() + 1, out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
