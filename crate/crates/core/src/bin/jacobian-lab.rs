use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jacobian_lab::config::ExperimentConfig;
use jacobian_lab::experiment::{self, DemoOptions, Workspace};
use jacobian_lab::Error;

#[derive(Parser)]
#[command(
    version,
    about = "Learn robot Jacobians from interaction data and use them for Cartesian control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Replace the config's seeds, collection seed and training seeds.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Roll out exploration trajectories and save the dataset.
    Collect {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train neural estimators on a collected dataset.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Dataset file; defaults to the one in --out.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Estimator to train; repeatable. Defaults to all neural ones.
        #[arg(long = "estimator")]
        estimators: Vec<String>,
    },
    /// Run closed-loop control with every configured estimator.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Derive Frobenius, condition-number and positive-definiteness tables.
    Analyze {
        /// Directory holding trajectories.csv and steps.csv.
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Collect, train, evaluate and analyse on the planar arm at small scale.
    Demo {
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.override_seed(s);
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    let seed = cli.seed_override;
    let force = cli.force;
    experiment::with_jobs(cli.jobs, move || match cli.command {
        Command::Collect { config, out } => {
            let s = experiment::cmd_collect(&load(&config, seed)?, &Workspace::new(out, force))?;
            println!(
                "collected {} samples from {} trajectories (seed {}) -> {}",
                s.samples,
                s.trajectories,
                s.seed,
                s.path.display()
            );
            Ok(())
        }
        Command::Train {
            config,
            out,
            dataset,
            estimators,
        } => {
            let cfg = load(&config, seed)?;
            let ws = Workspace::new(out, force);
            for s in experiment::cmd_train(&cfg, &ws, dataset.as_deref(), &estimators)? {
                println!(
                    "{}: best validation loss {:.6e} at epoch {} -> {}",
                    s.name,
                    s.best_val_loss,
                    s.best_epoch,
                    s.model_path.display()
                );
            }
            Ok(())
        }
        Command::Eval { config, out } => {
            let s = experiment::cmd_eval(&load(&config, seed)?, &Workspace::new(out, force))?;
            println!("{} trajectories -> {}", s.trajectories, s.dir.display());
            for r in &s.rows {
                println!(
                    "{:>12}  {:6.2}%",
                    r.estimator,
                    r.overall.unwrap_or(f64::NAN)
                );
            }
            Ok(())
        }
        Command::Analyze { results, out } => {
            for f in experiment::cmd_analyze(&results, &out)? {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Demo { out } => {
            let opts = DemoOptions {
                seed: seed.unwrap_or(0),
                ..DemoOptions::default()
            };
            let r = experiment::demo(&opts, &Workspace::new(out, force))?;
            println!("{} samples collected", r.collect.samples);
            for r in &r.eval.rows {
                println!(
                    "{:>12}  {:6.2}%",
                    r.estimator,
                    r.overall.unwrap_or(f64::NAN)
                );
            }
            Ok(())
        }
    })?
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidArgument(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
