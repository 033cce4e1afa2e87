use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use sdde_lab::{run, LabError, RunOptions, Task};

/// Run one experiment task from a config file.
#[derive(Debug, Parser)]
#[command(name = "sdde", version)]
struct Cli {
    task: Task,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `sim.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to SDDE_THREADS, then `sim.threads`.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 4 when `check` finds a counterexample.
    #[arg(long)]
    strict: bool,
}

fn threads(cli: &Cli) -> Result<Option<usize>, LabError> {
    if cli.threads.is_some() {
        return Ok(cli.threads);
    }
    if let Ok(v) = std::env::var("SDDE_THREADS") {
        let n = v
            .trim()
            .parse::<usize>()
            .map_err(|_| LabError::Config(format!("SDDE_THREADS must be a positive integer, got {v:?}")))?;
        return Ok(Some(n));
    }
    // Peek at the config for sim.threads; a broken config is reported by `run`.
    let from_config = std::fs::read_to_string(&cli.config)
        .ok()
        .and_then(|t| sdde_lab::config::ExperimentConfig::parse(&t).ok())
        .and_then(|c| c.sim.and_then(|s| s.threads));
    Ok(from_config)
}

fn execute(cli: &Cli) -> Result<(), LabError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads(cli)? {
        if n == 0 {
            return Err(LabError::Config("thread count must be positive".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| LabError::Config(format!("cannot start worker pool: {e}")))?;
    let opts = RunOptions {
        task: cli.task,
        config: cli.config.clone(),
        seed: cli.seed,
        strict: cli.strict,
        out: cli.out.clone(),
    };
    let outcome = pool.install(|| run(&opts))?;
    for line in &outcome.summary {
        println!("{line}");
    }
    println!("artifacts written to {}", outcome.dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
