use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlle_cli::{run_config, ExperimentConfig, RunError};

#[derive(Parser)]
#[command(name = "nlle", version, about = "Nonlinear error growth and predictability experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analysis described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override every seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (defaults to the available parallelism).
        #[arg(long)]
        workers: Option<usize>,
        /// Override `output.directory`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig, RunError> {
    Ok(ExperimentConfig::from_path(path)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => load(&config).and_then(|cfg| {
            let exp = cfg.validate()?;
            println!("{}: ok ({} on {})", config.display(), exp.config.analysis.kind, exp.model.name());
            Ok(())
        }),
        Command::Run {
            config,
            seed,
            workers,
            output,
        } => load(&config).and_then(|mut cfg| {
            if let Some(s) = seed {
                cfg.set_seed(s);
            }
            if let Some(dir) = output {
                cfg.output.directory = dir;
            }
            let exp = cfg.validate()?;
            let workers = workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let manifest = run_config(&exp, workers)?;
            for note in &manifest.notes {
                eprintln!("note: {note}");
            }
            for f in &manifest.files {
                println!("{}  {}", f.sha256, exp.config.output.directory.join(&f.path).display());
            }
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
