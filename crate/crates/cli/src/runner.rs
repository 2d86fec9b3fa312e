//! Orchestration for the CLI subcommands: build the environment from a
//! config, run the requested job, and leave a complete, reproducible run
//! directory behind (config snapshot, scenario, logs, checkpoints, summary).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mabd_core::env::{AntennaMode, Env};
use mabd_core::sac::{evaluate, train, train_ac, Checkpoint, EvalReport, TrainHooks};
use mabd_core::world::Scenario;

use crate::baseline::greedy_baseline;
use crate::config::{Algo, ExperimentConfig};
use crate::runio::{
    eval_episodes_csv, trace_jsonl, trajectory_csv, write_file, write_scenario, RunSummary,
    TrajectoryLeg,
};
use crate::CliError;

/// Evaluation episodes used for the post-training summary.
const TRAIN_SUMMARY_EVAL_EPISODES: usize = 5;

fn build_env(cfg: &ExperimentConfig) -> Result<Env, CliError> {
    let scenario = cfg.build_scenario()?;
    Ok(Env::new(scenario, cfg.env_params())?)
}

/// Train per the config and write the full artifact set. Returns the run
/// summary.
pub fn run_train(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let mut env = build_env(cfg)?;
    write_file(out, "config.toml", &cfg.to_toml())?;
    write_scenario(out, env.scenario())?;

    let mode = cfg.mode;
    // optional fresh layout per episode, seeded off the scenario seed
    let scenario_cfg = cfg.scenario.clone();
    let mut sampler = move |episode: u64| -> Scenario {
        let mut s = mabd_core::world::generate_scenario(
            scenario_cfg.seed.wrapping_add(episode),
            scenario_cfg.count_k,
            scenario_cfg.area_side_m,
            scenario_cfg.altitude_m,
            (scenario_cfg.volume_range_bits[0], scenario_cfg.volume_range_bits[1]),
        )
        .expect("validated scenario parameters");
        for bd in &mut s.bds {
            bd.gain_dbi = scenario_cfg.bd_gain_dbi;
        }
        s
    };
    let randomize = cfg.scenario.randomize_per_episode;

    let (checkpoint, log) = match cfg.agent.algo {
        Algo::Sac => {
            let out_dir = out.to_path_buf();
            let mut hook = |step: u64, agent: &mabd_core::sac::Agent| {
                let ck = Checkpoint::Sac { mode, agent: Box::new(agent.clone()) };
                let _ = write_file(&out_dir, &format!("checkpoint_{step}.json"), &ck.to_json());
            };
            let mut hooks = TrainHooks::with_interval(&mut hook);
            if randomize {
                hooks.scenario_per_episode = Some(&mut sampler);
            }
            let (agent, log) = train(&mut env, &cfg.sac_config(), cfg.agent.seed, hooks)?;
            (Checkpoint::Sac { mode, agent: Box::new(agent) }, log)
        }
        Algo::Ac => {
            let out_dir = out.to_path_buf();
            let mut hook = |step: u64, agent: &mabd_core::sac::AcAgent| {
                let ck = Checkpoint::Ac { mode, agent: Box::new(agent.clone()) };
                let _ = write_file(&out_dir, &format!("checkpoint_{step}.json"), &ck.to_json());
            };
            let mut hooks = TrainHooks::with_interval(&mut hook);
            if randomize {
                hooks.scenario_per_episode = Some(&mut sampler);
            }
            let (agent, log) = train_ac(&mut env, &cfg.ac_config(), cfg.agent.seed, hooks)?;
            (Checkpoint::Ac { mode, agent: Box::new(agent) }, log)
        }
    };

    write_file(out, "train_log.csv", &log.to_csv())?;
    write_file(out, "checkpoint.json", &checkpoint.to_json())?;

    let report = evaluate(checkpoint.policy(), &mut env, TRAIN_SUMMARY_EVAL_EPISODES)?;
    let summary = RunSummary::from_eval(
        match cfg.agent.algo {
            Algo::Sac => "sac",
            Algo::Ac => "ac",
        },
        mode,
        cfg.scenario.seed,
        cfg.agent.seed,
        cfg.agent.total_steps,
        log.episodes.len(),
        &report,
    );
    write_file(out, "run_summary.json", &serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    Ok(summary)
}

/// Evaluate a checkpoint on the config's scenario and write the metric
/// files: per-episode CSV, step trace, and trajectory table.
pub fn run_eval(
    checkpoint_path: &Path,
    cfg: &ExperimentConfig,
    episodes: usize,
    out: &Path,
) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let text = crate::runio::read_file(checkpoint_path)?;
    let checkpoint = Checkpoint::from_json(&text)?;
    let mut env = build_env(cfg)?;

    if checkpoint.mode() != cfg.mode {
        return Err(CliError::CheckpointMismatch(format!(
            "checkpoint was trained in {:?} mode, config asks for {:?} (action dims {} vs {})",
            checkpoint.mode(),
            cfg.mode,
            checkpoint.action_dim(),
            env.action_dim()
        )));
    }
    if checkpoint.action_dim() != env.action_dim() || checkpoint.state_dim() != env.state_dim() {
        return Err(CliError::CheckpointMismatch(format!(
            "checkpoint expects state/action dims {}/{}, environment provides {}/{}",
            checkpoint.state_dim(),
            checkpoint.action_dim(),
            env.state_dim(),
            env.action_dim()
        )));
    }

    let report = evaluate(checkpoint.policy(), &mut env, episodes)?;
    write_file(out, "config.toml", &cfg.to_toml())?;
    write_scenario(out, env.scenario())?;
    write_file(out, "eval_episodes.csv", &eval_episodes_csv(&report))?;
    // the environment still holds the last episode's trace; deterministic
    // evaluation makes every episode identical on a fixed scenario
    write_file(out, "trace.jsonl", &trace_jsonl(env.trace()))?;
    let legs = TrajectoryLeg::from_trace(env.scenario().start, env.trace());
    write_file(out, "trajectory.csv", &trajectory_csv(&legs))?;

    let summary = RunSummary::from_eval(
        match checkpoint {
            Checkpoint::Sac { .. } => "sac",
            Checkpoint::Ac { .. } => "ac",
        },
        cfg.mode,
        cfg.scenario.seed,
        cfg.agent.seed,
        0,
        0,
        &report,
    );
    write_file(out, "eval_summary.json", &serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    Ok(summary)
}

/// What the scripted planner achieved on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub mode: AntennaMode,
    pub scenario_seed: u64,
    pub hover_points: usize,
    pub total_time_s: f64,
    pub t_fly_s: f64,
    pub t_bc_s: f64,
    pub t_ma_s: f64,
    pub energy_j: f64,
    pub flight_m: f64,
    pub success: bool,
}

/// Run the scripted planner and write its summary and trajectory.
pub fn run_baseline(cfg: &ExperimentConfig, out: &Path) -> Result<BaselineSummary, CliError> {
    cfg.validate()?;
    let scenario = cfg.build_scenario()?;
    let outcome = greedy_baseline(&scenario, &cfg.env_params())?;
    let summary = BaselineSummary {
        mode: cfg.mode,
        scenario_seed: cfg.scenario.seed,
        hover_points: outcome.hover_points,
        total_time_s: outcome.summary.total_time_s,
        t_fly_s: outcome.summary.t_fly_s,
        t_bc_s: outcome.summary.t_bc_s,
        t_ma_s: outcome.summary.t_ma_s,
        energy_j: outcome.summary.total_energy_j,
        flight_m: outcome.summary.flight_distance_m,
        success: outcome.summary.success,
    };
    write_file(out, "config.toml", &cfg.to_toml())?;
    write_scenario(out, &scenario)?;
    write_file(out, "trajectory.csv", &trajectory_csv(&outcome.legs))?;
    write_file(
        out,
        "baseline_summary.json",
        &serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    Ok(summary)
}

/// Re-evaluate a checkpoint without touching the filesystem (used by tests
/// and the reproducibility checks).
pub fn eval_in_memory(
    checkpoint: &Checkpoint,
    cfg: &ExperimentConfig,
    episodes: usize,
) -> Result<EvalReport, CliError> {
    let mut env = build_env(cfg)?;
    Ok(evaluate(checkpoint.policy(), &mut env, episodes)?)
}

/// Resolve the output directory argument, keeping paths printable.
pub fn resolve_out_dir(out: Option<PathBuf>, default_name: &str) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from(default_name))
}
