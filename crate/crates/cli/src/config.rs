//! Experiment configuration: a flat TOML file with one block per subsystem,
//! unit suffixes in every key, and strict validation that reports every
//! violated key at once.

use serde::{Deserialize, Serialize};

use mabd_core::energy::{MaParams, PropulsionParams};
use mabd_core::env::{AntennaMode, EnvParams};
use mabd_core::link::{BackscatterCoeff, ChannelParams};
use mabd_core::sac::{AcConfig, SacConfig};
use mabd_core::world::{generate_scenario, Scenario};

use crate::CliError;

/// Which learner a training run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Sac,
    Ac,
}

/// Scenario block: device layout generation inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub count_k: usize,
    pub area_side_m: f64,
    pub altitude_m: f64,
    pub volume_range_bits: [f64; 2],
    pub bd_gain_dbi: f64,
    /// Train on a fresh layout every episode (seeded off `seed` plus the
    /// episode index) instead of one fixed layout per run.
    pub randomize_per_episode: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            count_k: 20,
            area_side_m: 200.0,
            altitude_m: 30.0,
            volume_range_bits: [1.0e5, 5.0e5],
            bd_gain_dbi: 0.0,
            randomize_per_episode: false,
        }
    }
}

/// Battery and reader-power block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyConfig {
    pub capacity_j: f64,
    pub comm_power_w: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self { capacity_j: 200_000.0, comm_power_w: 1.0 }
    }
}

/// Episode shaping block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpisodeConfig {
    pub step_cap: u32,
    pub reward_per_bd: f64,
    pub completion_reward: f64,
    pub fpa_reader_gain_dbi: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self { step_cap: 60, reward_per_bd: 50.0, completion_reward: 500.0, fpa_reader_gain_dbi: 5.0 }
    }
}

/// Learner block; AC runs ignore the SAC-only fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    pub algo: Algo,
    pub seed: u64,
    pub gamma: f64,
    pub tau: f64,
    pub alpha_init: f64,
    pub target_entropy: Option<f64>,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub lr_alpha: f64,
    pub warmup_steps: u64,
    pub updates_per_step: u32,
    pub total_steps: u64,
    pub eval_interval: u64,
    pub hidden_dims: Vec<usize>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        let sac = SacConfig::default();
        Self {
            algo: Algo::Sac,
            seed: 1,
            gamma: sac.gamma,
            tau: sac.tau,
            alpha_init: sac.alpha_init,
            target_entropy: sac.target_entropy,
            batch_size: sac.batch_size,
            buffer_capacity: sac.buffer_capacity,
            lr_actor: sac.lr_actor,
            lr_critic: sac.lr_critic,
            lr_alpha: sac.lr_alpha,
            warmup_steps: sac.warmup_steps,
            updates_per_step: sac.updates_per_step,
            total_steps: sac.total_steps,
            eval_interval: sac.eval_interval,
            hidden_dims: sac.hidden_dims,
        }
    }
}

/// The whole experiment file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub mode: AntennaMode,
    pub scenario: ScenarioConfig,
    pub channel: ChannelParams,
    pub backscatter: BackscatterCoeff,
    pub propulsion: PropulsionParams,
    pub ma: MaParams,
    pub energy: EnergyConfig,
    pub env: EpisodeConfig,
    pub agent: AgentConfig,
}

impl ExperimentConfig {
    /// Parse TOML text, apply `key=value` overrides (dotted paths), and
    /// validate.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| CliError::ConfigInvalid(vec![e.to_string()]))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e| CliError::ConfigInvalid(vec![e.to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Check every field, collecting one message per violated key.
    pub fn validate(&self) -> Result<(), CliError> {
        let propulsion_check = self.propulsion.validate();
        let ma_check = self.ma.validate();
        let mut bad = Vec::new();
        let mut check = |ok: bool, key: &str, msg: String| {
            if !ok {
                bad.push(format!("{key}: {msg}"));
            }
        };

        let s = &self.scenario;
        check(s.count_k >= 1, "scenario.count_k", "must be at least 1".into());
        check(s.area_side_m > 0.0, "scenario.area_side_m", "must be positive".into());
        check(s.altitude_m > 0.0, "scenario.altitude_m", "must be positive".into());
        check(
            s.volume_range_bits[0] > 0.0 && s.volume_range_bits[0] < s.volume_range_bits[1],
            "scenario.volume_range_bits",
            format!("must satisfy 0 < low < high, got {:?}", s.volume_range_bits),
        );

        let c = &self.channel;
        check(c.carrier_freq_hz > 0.0, "channel.carrier_freq_hz", "must be positive".into());
        check(c.bandwidth_hz > 0.0, "channel.bandwidth_hz", "must be positive".into());
        check(c.carrier_power_w > 0.0, "channel.carrier_power_w", "must be positive".into());
        check(c.env_rho > 0.0, "channel.env_rho", "must be positive".into());
        check(c.env_beta > 0.0, "channel.env_beta", "must be positive".into());
        check(
            c.excess_loss_nlos_db >= c.excess_loss_los_db,
            "channel.excess_loss_nlos_db",
            "must be at least the LoS excess loss".into(),
        );

        let xi = self.backscatter.xi();
        check(
            xi > 0.0 && xi <= 1.0,
            "backscatter",
            format!("efficiency derived from (chi, modulation_m, on_object_penalty_db) is {xi}, outside (0, 1]"),
        );

        check(propulsion_check.is_ok(), "propulsion", format!("{}", propulsion_check.as_ref().err().map(|e| e.to_string()).unwrap_or_default()));
        check(ma_check.is_ok(), "ma", format!("{}", ma_check.as_ref().err().map(|e| e.to_string()).unwrap_or_default()));

        check(self.energy.capacity_j > 0.0, "energy.capacity_j", "must be positive".into());
        check(self.energy.comm_power_w > 0.0, "energy.comm_power_w", "must be positive".into());

        let e = &self.env;
        check(e.step_cap >= 1, "env.step_cap", "must be at least 1".into());
        check(e.completion_reward >= 0.0, "env.completion_reward", "must be non-negative".into());
        // a service reward below the worst-case flight penalty teaches the
        // agent to ignore distant devices
        let d_max = (2.0 * s.area_side_m * s.area_side_m).sqrt();
        let min_reward = d_max / self.propulsion.speed_m_s;
        check(
            e.reward_per_bd >= min_reward,
            "env.reward_per_bd",
            format!(
                "must be at least d_max/v_u = sqrt(2)·L/v_u = {min_reward:.2} (got {})",
                e.reward_per_bd
            ),
        );

        let a = &self.agent;
        check(a.gamma > 0.0 && a.gamma < 1.0, "agent.gamma", format!("must lie in (0,1), got {}", a.gamma));
        check(a.tau > 0.0 && a.tau <= 1.0, "agent.tau", format!("must lie in (0,1], got {}", a.tau));
        check(a.alpha_init > 0.0, "agent.alpha_init", "must be positive".into());
        check(
            a.batch_size >= 1 && a.batch_size <= a.buffer_capacity,
            "agent.batch_size",
            format!("must lie in 1..=buffer_capacity ({})", a.buffer_capacity),
        );
        check(a.lr_actor > 0.0, "agent.lr_actor", "must be positive".into());
        check(a.lr_critic > 0.0, "agent.lr_critic", "must be positive".into());
        check(a.lr_alpha > 0.0, "agent.lr_alpha", "must be positive".into());
        check(a.updates_per_step >= 1, "agent.updates_per_step", "must be at least 1".into());
        check(a.total_steps >= 1, "agent.total_steps", "must be at least 1".into());
        check(
            !a.hidden_dims.is_empty() && a.hidden_dims.iter().all(|&d| d > 0),
            "agent.hidden_dims",
            "must be a non-empty list of positive widths".into(),
        );

        if bad.is_empty() {
            Ok(())
        } else {
            Err(CliError::ConfigInvalid(bad))
        }
    }

    /// Build the scenario this config describes.
    pub fn build_scenario(&self) -> Result<Scenario, CliError> {
        let s = &self.scenario;
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
        Ok(scenario)
    }

    /// Assemble the environment parameter bundle.
    pub fn env_params(&self) -> EnvParams {
        EnvParams {
            channel: self.channel.clone(),
            backscatter: self.backscatter,
            propulsion: self.propulsion.clone(),
            ma: self.ma.clone(),
            mode: self.mode,
            fpa_reader_gain_dbi: self.env.fpa_reader_gain_dbi,
            energy_capacity_j: self.energy.capacity_j,
            comm_power_w: self.energy.comm_power_w,
            step_cap: self.env.step_cap,
            reward_per_bd: self.env.reward_per_bd,
            completion_reward: self.env.completion_reward,
        }
    }

    pub fn sac_config(&self) -> SacConfig {
        let a = &self.agent;
        SacConfig {
            gamma: a.gamma,
            tau: a.tau,
            alpha_init: a.alpha_init,
            target_entropy: a.target_entropy,
            batch_size: a.batch_size,
            buffer_capacity: a.buffer_capacity,
            lr_actor: a.lr_actor,
            lr_critic: a.lr_critic,
            lr_alpha: a.lr_alpha,
            warmup_steps: a.warmup_steps,
            updates_per_step: a.updates_per_step,
            total_steps: a.total_steps,
            eval_interval: a.eval_interval,
            hidden_dims: a.hidden_dims.clone(),
        }
    }

    pub fn ac_config(&self) -> AcConfig {
        let a = &self.agent;
        AcConfig {
            gamma: a.gamma,
            lr_actor: a.lr_actor,
            lr_critic: a.lr_critic,
            total_steps: a.total_steps,
            eval_interval: a.eval_interval,
            hidden_dims: a.hidden_dims.clone(),
        }
    }
}

/// Apply one `dotted.path=value` override onto the raw TOML table. The value
/// is parsed as a TOML literal, falling back to a plain string.
fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (path, raw_value) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::BadArgs(format!("override '{assignment}' is not key=value")))?;
    let segments: Vec<&str> = path.trim().split('.').collect();
    if segments.is_empty() || segments.iter().any(|s| s.is_empty()) {
        return Err(CliError::BadArgs(format!("override '{assignment}' has an empty key path")));
    }
    let value = parse_toml_literal(raw_value.trim());

    let mut current = table;
    for seg in &segments[..segments.len() - 1] {
        current = current
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                CliError::BadArgs(format!("override '{assignment}' descends into a non-table key '{seg}'"))
            })?;
    }
    current.insert(segments[segments.len() - 1].to_string(), value);
    Ok(())
}

fn parse_toml_literal(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("literal parsed"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}
