use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use coagent_edge::harness::{emit_plot, run_experiment, Agent, ExperimentConfig};

#[derive(Parser)]
#[command(version, about = "Coagent edge-recommendation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train over a sweep of unreliability levels and write CSV curves.
    Run {
        /// key = value config file; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        agent: Option<Agent>,
        /// Comma-separated unreliability levels, e.g. 0,0.25,0.5
        #[arg(long)]
        levels: Option<String>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render an aggregate CSV as an SVG learning-curve plot.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> coagent_edge::Result<()> {
    match cli.command {
        Command::Run {
            config,
            agent,
            levels,
            episodes,
            trials,
            seed,
            out,
        } => {
            let mut cfg = match config {
                Some(path) => ExperimentConfig::from_file(&path)?,
                None => ExperimentConfig::default(),
            };
            if let Some(a) = agent {
                cfg.agent = a;
            }
            if let Some(l) = levels {
                cfg.set("levels", &l)?;
            }
            if let Some(e) = episodes {
                cfg.episodes = e;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let (result, files) = run_experiment(&cfg)?;
            for curve in &result.curves {
                eprintln!(
                    "p = {}: final smoothed return {:.4}",
                    curve.level,
                    curve.mean.last().copied().unwrap_or(f64::NAN)
                );
            }
            eprintln!("wrote {} and {}", files.raw.display(), files.aggregate.display());
            Ok(())
        }
        Command::Plot { input, out } => {
            emit_plot(&input, &out)?;
            eprintln!("wrote {}", out.display());
            Ok(())
        }
    }
}
