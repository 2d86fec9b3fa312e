//! Run-directory artifacts: config snapshots, scenario files, CSV logs,
//! JSON-lines traces, trajectory tables, and run summaries.
//!
//! Floating-point values are written with the shortest representation that
//! parses back to the identical bits, so every file round-trips exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mabd_core::env::{AntennaMode, TraceRecord};
use mabd_core::sac::EvalReport;
use mabd_core::world::Scenario;

use crate::CliError;

/// One straight flight leg ending in a hover-and-serve, for trajectory
/// plots. `ma_theta/ma_phi` is the antenna orientation after the hover's
/// last service (zero in omni mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLeg {
    pub index: u32,
    pub from: [f64; 2],
    pub to: [f64; 2],
    pub leg_m: f64,
    pub n_served: usize,
    pub served_ids: Vec<usize>,
    pub t_fly_s: f64,
    pub t_ma_s: f64,
    pub t_bc_s: f64,
    pub ma_theta_rad: f64,
    pub ma_phi_rad: f64,
}

impl TrajectoryLeg {
    /// Rebuild legs from an episode trace (per-step records plus the episode
    /// start position).
    pub fn from_trace(start: [f64; 2], trace: &[TraceRecord]) -> Vec<TrajectoryLeg> {
        let mut legs = Vec::with_capacity(trace.len());
        let mut from = start;
        for (i, rec) in trace.iter().enumerate() {
            let dx = rec.xy[0] - from[0];
            let dy = rec.xy[1] - from[1];
            legs.push(TrajectoryLeg {
                index: i as u32,
                from,
                to: rec.xy,
                leg_m: (dx * dx + dy * dy).sqrt(),
                n_served: rec.n_s,
                served_ids: rec.served_ids.clone(),
                t_fly_s: rec.t_fly,
                t_ma_s: rec.t_ma,
                t_bc_s: rec.t_bc,
                ma_theta_rad: rec.ma_theta,
                ma_phi_rad: rec.ma_phi,
            });
            from = rec.xy;
        }
        legs
    }
}

/// Trajectory CSV: one row per leg, device ids joined with `;`.
pub fn trajectory_csv(legs: &[TrajectoryLeg]) -> String {
    let mut out = String::from(
        "leg,from_x,from_y,to_x,to_y,leg_m,n_served,served_ids,t_fly_s,t_ma_s,t_bc_s,ma_theta_rad,ma_phi_rad\n",
    );
    for l in legs {
        let ids = l.served_ids.iter().map(|id| id.to_string()).collect::<Vec<_>>().join(";");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            l.index,
            l.from[0],
            l.from[1],
            l.to[0],
            l.to[1],
            l.leg_m,
            l.n_served,
            ids,
            l.t_fly_s,
            l.t_ma_s,
            l.t_bc_s,
            l.ma_theta_rad,
            l.ma_phi_rad
        ));
    }
    out
}

/// Parse a trajectory CSV back into legs.
pub fn parse_trajectory_csv(text: &str) -> Result<Vec<TrajectoryLeg>, CliError> {
    let mut legs = Vec::new();
    for (ln, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 13 {
            return Err(CliError::BadArgs(format!("trajectory line {} has {} fields", ln + 1, f.len())));
        }
        let num = |s: &str| -> Result<f64, CliError> {
            s.parse().map_err(|_| CliError::BadArgs(format!("bad number '{s}' on line {}", ln + 1)))
        };
        let served_ids = if f[7].is_empty() {
            Vec::new()
        } else {
            f[7].split(';')
                .map(|s| s.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| CliError::BadArgs(format!("bad id list on line {}", ln + 1)))?
        };
        legs.push(TrajectoryLeg {
            index: num(f[0])? as u32,
            from: [num(f[1])?, num(f[2])?],
            to: [num(f[3])?, num(f[4])?],
            leg_m: num(f[5])?,
            n_served: num(f[6])? as usize,
            served_ids,
            t_fly_s: num(f[8])?,
            t_ma_s: num(f[9])?,
            t_bc_s: num(f[10])?,
            ma_theta_rad: num(f[11])?,
            ma_phi_rad: num(f[12])?,
        });
    }
    Ok(legs)
}

/// Episode trace as JSON lines, one step per line.
pub fn trace_jsonl(trace: &[TraceRecord]) -> String {
    let mut out = String::new();
    for rec in trace {
        out.push_str(&serde_json::to_string(rec).expect("trace serializes"));
        out.push('\n');
    }
    out
}

/// Per-episode evaluation table.
pub fn eval_episodes_csv(report: &EvalReport) -> String {
    let mut out = String::from(
        "episode,return,total_time_s,t_fly_s,t_bc_s,t_ma_s,energy_J,flight_m,steps,collected,success\n",
    );
    for (i, e) in report.episodes.iter().enumerate() {
        let s = &e.summary;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            i,
            e.ret,
            s.total_time_s,
            s.t_fly_s,
            s.t_bc_s,
            s.t_ma_s,
            s.total_energy_j,
            s.flight_distance_m,
            s.steps,
            s.collected,
            s.success
        ));
    }
    out
}

/// Top-level description of a finished run, written as `run_summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algo: String,
    pub mode: AntennaMode,
    pub scenario_seed: u64,
    pub agent_seed: u64,
    pub env_steps: u64,
    pub episodes: usize,
    pub eval_episodes: usize,
    pub mean_total_time_s: f64,
    pub mean_energy_j: f64,
    pub mean_flight_m: f64,
    pub success_rate: f64,
}

impl RunSummary {
    pub fn from_eval(
        algo: &str,
        mode: AntennaMode,
        scenario_seed: u64,
        agent_seed: u64,
        env_steps: u64,
        episodes: usize,
        report: &EvalReport,
    ) -> Self {
        Self {
            algo: algo.to_string(),
            mode,
            scenario_seed,
            agent_seed,
            env_steps,
            episodes,
            eval_episodes: report.episodes.len(),
            mean_total_time_s: report.mean_total_time_s,
            mean_energy_j: report.mean_energy_j,
            mean_flight_m: report.mean_flight_m,
            success_rate: report.success_rate,
        }
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
    Ok(path)
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))
}

pub fn write_scenario(dir: &Path, scenario: &Scenario) -> Result<PathBuf, CliError> {
    write_file(dir, "scenario.json", &serde_json::to_string_pretty(scenario).expect("scenario serializes"))
}

pub fn read_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::BadArgs(format!("bad scenario file: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_csv_roundtrips_numerically() {
        let legs = vec![
            TrajectoryLeg {
                index: 0,
                from: [0.0, 0.0],
                to: [10.123456789012345, 0.1],
                leg_m: 10.123948,
                n_served: 2,
                served_ids: vec![3, 1],
                t_fly_s: 1.0123456789,
                t_ma_s: 0.25,
                t_bc_s: 0.0125,
                ma_theta_rad: 0.7853981633974483,
                ma_phi_rad: 5.9341194567807207,
            },
            TrajectoryLeg {
                index: 1,
                from: [10.123456789012345, 0.1],
                to: [10.123456789012345, 0.1],
                leg_m: 0.0,
                n_served: 0,
                served_ids: vec![],
                t_fly_s: 0.0,
                t_ma_s: 0.5,
                t_bc_s: 0.0,
                ma_theta_rad: 0.0,
                ma_phi_rad: 0.0,
            },
        ];
        let csv = trajectory_csv(&legs);
        let back = parse_trajectory_csv(&csv).unwrap();
        assert_eq!(back, legs);
    }
}
