//! Parameter sweeps over device count or area size: run the scripted
//! baseline (or a trained agent) for several trials per value and tabulate
//! mission time, energy, and flight distance.

use serde::{Deserialize, Serialize};

use mabd_core::env::Env;
use mabd_core::sac::{evaluate, train, train_ac, TrainHooks};
use mabd_core::world::generate_scenario;

use crate::baseline::greedy_baseline;
use crate::config::ExperimentConfig;
use crate::CliError;

/// Which scenario dimension the sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVariable {
    /// Device count.
    K,
    /// Area side length in meters.
    L,
}

/// Which solver produces each trial's mission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAgent {
    Greedy,
    Sac,
    Ac,
}

/// One sweep request.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub trials_per_value: u32,
    pub agent: SweepAgent,
    pub base: ExperimentConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        let mut bad = Vec::new();
        if self.values.is_empty() {
            bad.push("sweep.values: must not be empty".to_string());
        }
        if self.values.iter().any(|&v| !(v > 0.0)) {
            bad.push(format!("sweep.values: all values must be positive, got {:?}", self.values));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            bad.push(format!("sweep.values: must be strictly increasing, got {:?}", self.values));
        }
        if self.trials_per_value == 0 {
            bad.push("sweep.trials_per_value: must be at least 1".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(CliError::ConfigInvalid(bad))
        }
    }
}

/// One trial's outcome; failed trials carry an error class and zeroed
/// metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub trial: u32,
    pub total_time_s: f64,
    pub energy_j: f64,
    pub flight_m: f64,
    pub success: bool,
    pub error: String,
}

/// Aggregates per swept value (over successful and failed trials alike).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepStat {
    pub value: f64,
    pub mean_total_time_s: f64,
    pub stddev_total_time_s: f64,
    pub mean_energy_j: f64,
    pub stddev_energy_j: f64,
    pub mean_flight_m: f64,
    pub stddev_flight_m: f64,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub stats: Vec<SweepStat>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Run every (value, trial) cell. Trial `t` uses scenario seed
/// `base_seed + t` and agent seed `base_agent_seed + t`, so the whole sweep
/// is reproducible from the base config alone.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, CliError> {
    spec.validate()?;
    spec.base.validate()?;
    let mut rows = Vec::new();
    let mut stats = Vec::new();

    for &value in &spec.values {
        let mut times = Vec::new();
        let mut energies = Vec::new();
        let mut flights = Vec::new();
        let mut successes = 0u32;
        for trial in 0..spec.trials_per_value {
            let mut cfg = spec.base.clone();
            match spec.variable {
                SweepVariable::K => cfg.scenario.count_k = value as usize,
                SweepVariable::L => cfg.scenario.area_side_m = value,
            }
            cfg.scenario.seed = spec.base.scenario.seed + trial as u64;
            cfg.agent.seed = spec.base.agent.seed + trial as u64;

            let row = match run_trial(&cfg, spec.agent) {
                Ok((time, energy, flight, success)) => SweepRow {
                    value,
                    trial,
                    total_time_s: time,
                    energy_j: energy,
                    flight_m: flight,
                    success,
                    error: String::new(),
                },
                Err(e) => SweepRow {
                    value,
                    trial,
                    total_time_s: 0.0,
                    energy_j: 0.0,
                    flight_m: 0.0,
                    success: false,
                    error: e.class().to_string(),
                },
            };
            times.push(row.total_time_s);
            energies.push(row.energy_j);
            flights.push(row.flight_m);
            successes += row.success as u32;
            rows.push(row);
        }
        let (mt, st) = mean_std(&times);
        let (me, se) = mean_std(&energies);
        let (mf, sf) = mean_std(&flights);
        stats.push(SweepStat {
            value,
            mean_total_time_s: mt,
            stddev_total_time_s: st,
            mean_energy_j: me,
            stddev_energy_j: se,
            mean_flight_m: mf,
            stddev_flight_m: sf,
            success_rate: successes as f64 / spec.trials_per_value as f64,
        });
    }
    Ok(SweepResult { rows, stats })
}

fn run_trial(cfg: &ExperimentConfig, agent: SweepAgent) -> Result<(f64, f64, f64, bool), CliError> {
    let s = &cfg.scenario;
    let mut scenario = generate_scenario(
        s.seed,
        s.count_k,
        s.area_side_m,
        s.altitude_m,
        (s.volume_range_bits[0], s.volume_range_bits[1]),
    )?;
    for bd in &mut scenario.bds {
        bd.gain_dbi = s.bd_gain_dbi;
    }
    let params = cfg.env_params();
    match agent {
        SweepAgent::Greedy => {
            let out = greedy_baseline(&scenario, &params)?;
            Ok((
                out.summary.total_time_s,
                out.summary.total_energy_j,
                out.summary.flight_distance_m,
                out.summary.success,
            ))
        }
        SweepAgent::Sac => {
            let mut env = Env::new(scenario, params)?;
            let (learned, _) = train(&mut env, &cfg.sac_config(), cfg.agent.seed, TrainHooks::default())?;
            let report = evaluate(&learned, &mut env, 1)?;
            let e = &report.episodes[0].summary;
            Ok((e.total_time_s, e.total_energy_j, e.flight_distance_m, e.success))
        }
        SweepAgent::Ac => {
            let mut env = Env::new(scenario, params)?;
            let (learned, _) = train_ac(&mut env, &cfg.ac_config(), cfg.agent.seed, TrainHooks::default())?;
            let report = evaluate(&learned, &mut env, 1)?;
            let e = &report.episodes[0].summary;
            Ok((e.total_time_s, e.total_energy_j, e.flight_distance_m, e.success))
        }
    }
}

/// Sweep table: data rows first, then `mean` rows, then `stddev` rows when
/// there is more than one trial per value.
pub fn sweep_csv(result: &SweepResult, trials_per_value: u32) -> String {
    let mut out = String::from("value,trial,total_time_s,energy_J,flight_m,success,error\n");
    for r in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.value, r.trial, r.total_time_s, r.energy_j, r.flight_m, r.success, r.error
        ));
    }
    for s in &result.stats {
        out.push_str(&format!(
            "{},mean,{},{},{},{},\n",
            s.value, s.mean_total_time_s, s.mean_energy_j, s.mean_flight_m, s.success_rate
        ));
    }
    if trials_per_value > 1 {
        for s in &result.stats {
            out.push_str(&format!(
                "{},stddev,{},{},{},,\n",
                s.value, s.stddev_total_time_s, s.stddev_energy_j, s.stddev_flight_m
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig::default()
    }

    #[test]
    fn spec_validation_rejects_unsorted_values() {
        let spec = SweepSpec {
            variable: SweepVariable::K,
            values: vec![10.0, 5.0],
            trials_per_value: 1,
            agent: SweepAgent::Greedy,
            base: base(),
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn greedy_k_sweep_times_grow_with_device_count() {
        let spec = SweepSpec {
            variable: SweepVariable::K,
            values: vec![5.0, 10.0, 15.0, 20.0],
            trials_per_value: 3,
            agent: SweepAgent::Greedy,
            base: base(),
        };
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.rows.len(), 12);
        assert!(result.rows.iter().all(|r| r.success), "all trials should finish");
        for w in result.stats.windows(2) {
            assert!(
                w[1].mean_total_time_s >= w[0].mean_total_time_s,
                "mean time must not drop from K={} to K={}",
                w[0].value,
                w[1].value
            );
        }
    }

    #[test]
    fn failed_trials_are_marked_and_the_sweep_continues() {
        // omni mode at the default 30 m altitude cannot close any link, so
        // every trial fails with an infeasibility class
        let mut base = base();
        base.mode = mabd_core::env::AntennaMode::Fpa;
        let spec = SweepSpec {
            variable: SweepVariable::K,
            values: vec![2.0, 4.0],
            trials_per_value: 2,
            agent: SweepAgent::Greedy,
            base,
        };
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.rows.len(), 4);
        for row in &result.rows {
            assert!(!row.success);
            assert_eq!(row.error, "infeasible_scenario");
        }
        assert!(result.stats.iter().all(|s| s.success_rate == 0.0));
    }

    #[test]
    fn sac_sweep_path_trains_and_evaluates() {
        let mut base = base();
        base.scenario.count_k = 2;
        base.scenario.area_side_m = 40.0;
        base.agent.total_steps = 200;
        base.agent.warmup_steps = 50;
        base.agent.batch_size = 16;
        base.agent.buffer_capacity = 1000;
        base.agent.hidden_dims = vec![8, 8];
        base.env.step_cap = 8;
        let spec = SweepSpec {
            variable: SweepVariable::K,
            values: vec![2.0],
            trials_per_value: 1,
            agent: SweepAgent::Sac,
            base,
        };
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.rows.len(), 1);
        assert!(result.rows[0].error.is_empty(), "trial failed: {}", result.rows[0].error);
        assert!(result.rows[0].total_time_s > 0.0);
    }

    #[test]
    fn stddev_rows_only_with_multiple_trials() {
        let spec = SweepSpec {
            variable: SweepVariable::K,
            values: vec![3.0],
            trials_per_value: 1,
            agent: SweepAgent::Greedy,
            base: base(),
        };
        let result = run_sweep(&spec).unwrap();
        let csv = sweep_csv(&result, spec.trials_per_value);
        assert!(csv.contains(",mean,"));
        assert!(!csv.contains(",stddev,"));
    }
}
