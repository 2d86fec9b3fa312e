//! `mabd` - train, evaluate, and benchmark data-collection missions for a
//! UAV reader with a steerable directional antenna over backscatter sensors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mabd_cli::config::ExperimentConfig;
use mabd_cli::plotdata::export_plotdata;
use mabd_cli::runio::{read_file, write_file};
use mabd_cli::runner::{resolve_out_dir, run_baseline, run_eval, run_train};
use mabd_cli::sweep::{run_sweep, sweep_csv, SweepAgent, SweepSpec, SweepVariable};
use mabd_cli::CliError;

#[derive(Parser)]
#[command(name = "mabd", version, about = "UAV backscatter data-collection simulator and RL trainer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariableArg {
    K,
    L,
}

#[derive(Clone, Copy, ValueEnum)]
enum AgentArg {
    Greedy,
    Sac,
    Ac,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy and write logs, checkpoints, and a run summary.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Repeatable dotted-path override, e.g. --override agent.gamma=0.95
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Overrides agent.seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint with the deterministic policy.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the scripted greedy planner on the config's scenario.
    Baseline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep device count or area size and tabulate mission metrics.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        variable: VariableArg,
        /// Comma-separated swept values, strictly increasing.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        trials: u32,
        #[arg(long, value_enum, default_value = "greedy")]
        agent: AgentArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert run artifacts into plot-ready CSVs.
    ExportPlotdata {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Smoothing window (episodes) for the training curve.
        #[arg(long, default_value_t = 100)]
        window: usize,
    },
}

fn load_config(path: &PathBuf, overrides: &[String], seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let text = read_file(path)?;
    let mut all = overrides.to_vec();
    if let Some(s) = seed {
        all.push(format!("agent.seed={s}"));
    }
    ExperimentConfig::from_toml(&text, &all)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train { config, overrides, seed, out } => {
            let cfg = load_config(&config, &overrides, seed)?;
            let out = resolve_out_dir(out, "mabd-train");
            let summary = run_train(&cfg, &out)?;
            println!(
                "train done: {} episodes, mean mission time {:.2} s, success rate {:.0}% → {}",
                summary.episodes,
                summary.mean_total_time_s,
                100.0 * summary.success_rate,
                out.display()
            );
        }
        Command::Eval { checkpoint, config, overrides, seed, episodes, out } => {
            let cfg = load_config(&config, &overrides, seed)?;
            let out = resolve_out_dir(out, "mabd-eval");
            let summary = run_eval(&checkpoint, &cfg, episodes, &out)?;
            println!(
                "eval done: mean mission time {:.2} s over {} episodes, success rate {:.0}% → {}",
                summary.mean_total_time_s,
                summary.eval_episodes,
                100.0 * summary.success_rate,
                out.display()
            );
        }
        Command::Baseline { config, overrides, seed, out } => {
            let cfg = load_config(&config, &overrides, seed)?;
            let out = resolve_out_dir(out, "mabd-baseline");
            let summary = run_baseline(&cfg, &out)?;
            println!(
                "baseline done: {:?} mode, {} hover points, mission time {:.2} s, flight {:.1} m → {}",
                summary.mode,
                summary.hover_points,
                summary.total_time_s,
                summary.flight_m,
                out.display()
            );
        }
        Command::Sweep { config, overrides, seed, variable, values, trials, agent, out } => {
            let base = load_config(&config, &overrides, seed)?;
            let out = resolve_out_dir(out, "mabd-sweep");
            let spec = SweepSpec {
                variable: match variable {
                    VariableArg::K => SweepVariable::K,
                    VariableArg::L => SweepVariable::L,
                },
                values,
                trials_per_value: trials,
                agent: match agent {
                    AgentArg::Greedy => SweepAgent::Greedy,
                    AgentArg::Sac => SweepAgent::Sac,
                    AgentArg::Ac => SweepAgent::Ac,
                },
                base,
            };
            let result = run_sweep(&spec)?;
            write_file(&out, "config.toml", &spec.base.to_toml())?;
            let path = write_file(&out, "sweep.csv", &sweep_csv(&result, spec.trials_per_value))?;
            println!("sweep done: {} rows → {}", result.rows.len(), path.display());
        }
        Command::ExportPlotdata { run, out, window } => {
            let out = out.unwrap_or_else(|| run.clone());
            let written = export_plotdata(&run, &out, window)?;
            for p in &written {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
