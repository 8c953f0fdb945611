//! `ranopt` command line: map generation, agent training, checkpoint
//! evaluation, static re-solving baselines, and run comparison.

use clap::{Parser, Subcommand};
use ranopt::experiment::RunSummary;
use ranopt::{compare_runs, evaluate_checkpoint, run_experiment, CoreError, ExperimentConfig, RunArtifacts};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Overrides `output_dir` when set; the `--out` flag still wins.
const OUTPUT_DIR_ENV: &str = "RANOPT_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "ranopt",
    version,
    about = "Cellular load-balancing sandbox: simulator, RL agents, static baselines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an RSRP map tensor and write it as a binary file
    Genmap {
        /// Experiment config (TOML); its [map] section drives generation
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed before deriving the map substream
        #[arg(long)]
        seed: Option<u64>,
        /// Output file (default: <output_dir>/map.bin)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train an RL agent and write CSV artifacts plus a checkpoint
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory
        #[arg(long)]
        out: Option<String>,
    },
    /// Roll out a saved checkpoint greedily (no exploration, no updates)
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Checkpoint written by a previous train run
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run a static re-solving baseline over the same horizon
    Static {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Print a side-by-side summary of finished runs
    Compare {
        /// Run directories, each holding the three CSV artifacts
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Final-window length in periods for convergence stats
        #[arg(long, default_value_t = 96)]
        window: usize,
        /// Also write the summary table as CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // one line, however the underlying error chose to wrap itself
            let flat = e.to_string().split_whitespace().collect::<Vec<_>>().join(" ");
            eprintln!("error: {flat}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CoreError> {
    match cli.command {
        Command::Genmap { config, seed, out } => {
            let cfg = load_config(&config, seed, None)?;
            let map = cfg.build_map()?;
            let file = out.unwrap_or_else(|| Path::new(&cfg.output_dir).join("map.bin"));
            if let Some(dir) = file.parent() {
                if !dir.as_os_str().is_empty() {
                    fs::create_dir_all(dir).map_err(|e| CoreError::io(dir.display().to_string(), e))?;
                }
            }
            map.save_map(&file)?;
            println!(
                "map: {} anchors x {} tilts x {} cells -> {}",
                map.num_anchors(),
                map.num_tilts,
                map.num_bs(),
                file.display()
            );
            Ok(())
        }
        Command::Train { config, seed, out } => {
            let cfg = load_config(&config, seed, out)?;
            if cfg.agent.rl_mode().is_none() {
                return Err(CoreError::Config(format!(
                    "train needs an RL agent (pdpg or ddpg-scalar), got '{}'; use the static subcommand",
                    cfg.agent.kind_name()
                )));
            }
            report_run(&run_experiment(&cfg)?);
            Ok(())
        }
        Command::Evaluate { config, checkpoint, seed, out } => {
            let cfg = load_config(&config, seed, out)?;
            report_run(&evaluate_checkpoint(&cfg, &checkpoint)?);
            Ok(())
        }
        Command::Static { config, seed, out } => {
            let cfg = load_config(&config, seed, out)?;
            if cfg.agent.rl_mode().is_some() {
                return Err(CoreError::Config(format!(
                    "static needs a static-* or static-exact agent, got '{}'; use the train subcommand",
                    cfg.agent.kind_name()
                )));
            }
            report_run(&run_experiment(&cfg)?);
            Ok(())
        }
        Command::Compare { runs, window, out } => {
            let summaries = compare_runs(&runs, window)?;
            print_table(&summaries);
            if let Some(path) = out {
                write_summary_csv(&path, &summaries)?;
            }
            Ok(())
        }
    }
}

/// Load + validate, then apply overrides: --seed, then --out, then the
/// output-dir env var when no flag was given.
fn load_config(path: &Path, seed: Option<u64>, out: Option<String>) -> Result<ExperimentConfig, CoreError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    } else if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
        if !dir.is_empty() {
            cfg.output_dir = dir;
        }
    }
    Ok(cfg)
}

fn report_run(art: &RunArtifacts) {
    println!(
        "run complete: {} periods -> {}",
        art.periods.len(),
        art.output_dir.display()
    );
}

fn print_table(summaries: &[RunSummary]) {
    let width = summaries.iter().map(|s| s.name.len()).max().unwrap_or(3).max(3);
    println!(
        "{:<width$}  {:>8}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}  {:>10}  {:>10}",
        "run", "samples", "tp_p10", "tp_p50", "tp_p90", "peak_load", "load_std", "final_mean", "final_std",
    );
    for s in summaries {
        println!(
            "{:<width$}  {:>8}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9.4}  {:>10.4}  {:>10.4}",
            s.name,
            s.throughput_samples,
            s.throughput_p10,
            s.throughput_p50,
            s.throughput_p90,
            s.mean_peak_load,
            s.load_std,
            s.final_window_mean,
            s.final_window_std,
        );
    }
}

fn write_summary_csv(path: &Path, summaries: &[RunSummary]) -> Result<(), CoreError> {
    let mut text = String::from("# schema: compare_summary v1\n");
    text.push_str("run,throughput_samples,throughput_p10,throughput_p50,throughput_p90,mean_peak_load,load_std,periods,final_window_mean,final_window_std\n");
    for s in summaries {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            s.name,
            s.throughput_samples,
            s.throughput_p10,
            s.throughput_p50,
            s.throughput_p90,
            s.mean_peak_load,
            s.load_std,
            s.periods,
            s.final_window_mean,
            s.final_window_std,
        ));
    }
    fs::write(path, text).map_err(|e| CoreError::io(path.display().to_string(), e))
}
