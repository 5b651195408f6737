use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use heg_core::config::RunConfig;
use heg_core::experiment::{certify_summary, replay_check, run_experiment};
use heg_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_CHECK: u8 = 4;

/// Adaptive extragradient solver for equilibrium problems on flat manifolds.
#[derive(Parser)]
#[command(name = "heg", version)]
struct Cli {
    /// Output directory (overrides `output_dir` of the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Concurrent sweep runs.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// RNG seed (overrides `seed` of the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (lambda0, mu) pair of a config.
    Run { config: PathBuf },
    /// Grid-certify the final point of a run summary.
    Certify {
        summary: PathBuf,
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[arg(long, default_value_t = 1e-3)]
        slack: f64,
    },
    /// Re-run a config and compare against a recorded trace.
    Replay {
        trace: PathBuf,
        config: PathBuf,
        /// Sweep index; read from a `run_NNN.csv` name when omitted.
        #[arg(long)]
        index: Option<usize>,
    },
    /// Print the default four-firm config with every field spelled out.
    PrintConfig,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config { .. } => EXIT_CONFIG,
                _ => EXIT_SOLVER,
            })
        }
    }
}

fn load(cli: &Cli, path: &Path) -> heg_core::Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> heg_core::Result<ExitCode> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = load(cli, config)?;
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
            let manifest = run_experiment(&cfg, &out, cli.jobs)?;
            for r in &manifest.runs {
                println!(
                    "run {:03} lambda0={} mu={} {:?} iterations={} eps={}",
                    r.index,
                    r.lambda0,
                    r.mu,
                    r.status,
                    r.iterations,
                    r.final_eps.map_or("-".into(), |e| format!("{e:e}"))
                );
            }
            println!("wrote {}", out.join("manifest.json").display());
            Ok(if manifest.all_converged() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_SOLVER)
            })
        }
        Command::Certify { summary, points, slack } => {
            let cert = certify_summary(summary, *points, *slack)?;
            println!(
                "certified={} worst_value={:e} worst_y={:?} points={} slack={}",
                cert.certified, cert.worst_value, cert.worst_y, cert.points, cert.slack
            );
            Ok(if cert.certified {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK)
            })
        }
        Command::Replay { trace, config, index } => {
            let cfg = load(cli, config)?;
            let report = replay_check(trace, &cfg, *index)?;
            match &report.divergence {
                None => {
                    println!("replay ok: run {:03}, {} rows", report.index, report.rows);
                    Ok(ExitCode::SUCCESS)
                }
                Some(d) => {
                    println!(
                        "replay mismatch against run {:03}: row {} column {}: recorded {} replayed {}",
                        report.index, d.row, d.column, d.recorded, d.replayed
                    );
                    Ok(ExitCode::from(EXIT_CHECK))
                }
            }
        }
        Command::PrintConfig => {
            let mut cfg = RunConfig::nash_cournot_default();
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if let Some(out) = &cli.out {
                cfg.output_dir = out.display().to_string();
            }
            println!("{}", serde_json::to_string_pretty(&cfg)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
