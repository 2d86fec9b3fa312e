//! The episodic decision process: a UAV flies discrete legs over the area,
//! hovers, reorients its antenna, and drains every device whose link closes
//! from the hover point.
//!
//! Agents interact through normalized `[-1, 1]` action vectors and flat
//! feature vectors; the environment owns the mapping to physical quantities.
//! Every step is a pure function of the current state and action, so a fixed
//! scenario and action sequence replays bit-identically.

use serde::{Deserialize, Serialize};

use crate::energy::{
    ma_move, propulsion_power, EnergyComponent, EnergyLedger, MaParams, PropulsionParams,
};
use crate::link::{compute_budget, qualifies, BackscatterCoeff, ChannelParams, LinkBudget};
use crate::world::{aim_angles, observe_bds, wrap_azimuth, Scenario, UavPose};
use crate::Error;

/// Reader antenna fit: steerable main lobe or fixed omni.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AntennaMode {
    #[default]
    Ma,
    Fpa,
}

impl AntennaMode {
    pub fn action_dim(self) -> usize {
        match self {
            AntennaMode::Ma => 4,
            AntennaMode::Fpa => 2,
        }
    }
}

/// Everything the environment needs besides the scenario itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvParams {
    pub channel: ChannelParams,
    pub backscatter: BackscatterCoeff,
    pub propulsion: PropulsionParams,
    pub ma: MaParams,
    pub mode: AntennaMode,
    /// Omni reader gain used in FPA mode.
    pub fpa_reader_gain_dbi: f64,
    pub energy_capacity_j: f64,
    /// Reader transmit power charged against the battery while collecting.
    pub comm_power_w: f64,
    /// Maximum decision steps per episode.
    pub step_cap: u32,
    /// Reward per device served.
    pub reward_per_bd: f64,
    /// One-off reward for finishing the whole collection task.
    pub completion_reward: f64,
}

impl Default for EnvParams {
    fn default() -> Self {
        Self {
            channel: ChannelParams::default(),
            backscatter: BackscatterCoeff::default(),
            propulsion: PropulsionParams::default(),
            ma: MaParams::default(),
            mode: AntennaMode::Ma,
            fpa_reader_gain_dbi: 5.0,
            energy_capacity_j: 200_000.0,
            comm_power_w: 1.0,
            step_cap: 60,
            reward_per_bd: 50.0,
            completion_reward: 500.0,
        }
    }
}

impl EnvParams {
    pub fn validate(&self) -> Result<(), Error> {
        self.channel.validate()?;
        self.backscatter.validate()?;
        self.propulsion.validate()?;
        self.ma.validate()?;
        if self.step_cap == 0 {
            return Err(Error::Parameter("step cap must be at least 1".into()));
        }
        if !(self.energy_capacity_j > 0.0) {
            return Err(Error::Parameter("energy capacity must be positive".into()));
        }
        if !(self.comm_power_w > 0.0) {
            return Err(Error::Parameter("comm power must be positive".into()));
        }
        Ok(())
    }
}

/// Observable state: UAV position plus per-device collected flags, azimuths,
/// and horizontal distances, all ordered by device id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub uav_xy: [f64; 2],
    pub collected: Vec<bool>,
    pub azimuths_rad: Vec<f64>,
    pub distances_m: Vec<f64>,
}

/// Physical action after range mapping: leg length factor, heading, and (in
/// MA mode) the initial antenna orientation for the new hover point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvAction {
    pub leg_factor: f64,
    pub heading_rad: f64,
    pub theta_init_rad: f64,
    pub phi_init_rad: f64,
}

/// Why an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// Every device collected.
    Collected,
    /// Battery budget exceeded.
    EnergyExhausted,
    /// Step cap reached; training may still bootstrap from the next state.
    StepCap,
}

/// Additive reward decomposition for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardComponents {
    pub service: f64,
    pub completion: f64,
    pub flight_penalty: f64,
    pub ma_penalty: f64,
    pub comm_penalty: f64,
}

impl RewardComponents {
    pub fn total(&self) -> f64 {
        self.service + self.completion + self.flight_penalty + self.ma_penalty + self.comm_penalty
    }
}

/// Per-step bookkeeping exposed alongside the reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub n_s: usize,
    pub served_ids: Vec<usize>,
    pub d_u_m: f64,
    pub t_fly_s: f64,
    pub t_ma_s: f64,
    pub t_bc_s: f64,
    pub e_flight_j: f64,
    pub e_hover_j: f64,
    pub e_comm_j: f64,
    pub e_ma_j: f64,
    pub completed: bool,
    pub termination: Option<Termination>,
}

/// Result of one decision step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: EnvState,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// End-of-episode totals; `total_time_s` is the mission objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub t_fly_s: f64,
    pub t_bc_s: f64,
    pub t_ma_s: f64,
    pub total_time_s: f64,
    pub total_energy_j: f64,
    pub flight_distance_m: f64,
    pub steps: u32,
    pub collected: usize,
    pub success: bool,
}

/// One JSON-lines trace record per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u32,
    pub xy: [f64; 2],
    pub action: Vec<f64>,
    pub reward: f64,
    pub n_s: usize,
    pub t_fly: f64,
    pub t_ma: f64,
    pub t_bc: f64,
    pub served_ids: Vec<usize>,
    pub energies: EnergyBreakdown,
    /// Antenna orientation after the step.
    pub ma_theta: f64,
    pub ma_phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub flight_j: f64,
    pub hover_j: f64,
    pub comm_j: f64,
    pub ma_j: f64,
}

/// Costs of serving every qualified device from the current hover point.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceReport {
    pub served_ids: Vec<usize>,
    pub t_ma_s: f64,
    pub t_bc_s: f64,
    pub e_ma_j: f64,
    pub e_comm_j: f64,
    pub e_hover_j: f64,
}

/// Map a normalized `[-1, 1]` component affinely onto `[lo, hi]`.
fn affine(u: f64, lo: f64, hi: f64) -> f64 {
    let c = u.clamp(-1.0, 1.0);
    lo + (c + 1.0) * 0.5 * (hi - lo)
}

/// Candidate position from the motion model, then clipped into the area;
/// returns the clipped position and the actual displacement.
pub fn apply_move(from: [f64; 2], leg_factor: f64, heading_rad: f64, side: f64) -> ([f64; 2], f64) {
    let d_max = (2.0 * side * side).sqrt();
    let d = leg_factor * d_max;
    let cand = [from[0] + d * heading_rad.cos(), from[1] + d * heading_rad.sin()];
    let clipped = [cand[0].clamp(0.0, side), cand[1].clamp(0.0, side)];
    let dx = clipped[0] - from[0];
    let dy = clipped[1] - from[1];
    (clipped, (dx * dx + dy * dy).sqrt())
}

/// Reward from the step's service counts and time costs.
pub fn reward_components(
    n_s: usize,
    completed: bool,
    t_fly_s: f64,
    t_ma_s: f64,
    t_bc_s: f64,
    params: &EnvParams,
) -> RewardComponents {
    RewardComponents {
        service: n_s as f64 * params.reward_per_bd,
        completion: if completed { params.completion_reward } else { 0.0 },
        flight_penalty: -t_fly_s,
        ma_penalty: -t_ma_s,
        comm_penalty: -t_bc_s,
    }
}

/// The simulation environment for one scenario.
#[derive(Debug, Clone)]
pub struct Env {
    scenario: Scenario,
    params: EnvParams,
    xi: f64,
    hover_power_w: f64,
    cruise_power_w: f64,
    state: EnvState,
    ma_orientation: (f64, f64),
    ledger: EnergyLedger,
    step_idx: u32,
    termination: Option<Termination>,
    t_fly_s: f64,
    t_bc_s: f64,
    t_ma_s: f64,
    flight_m: f64,
    trace: Vec<TraceRecord>,
}

impl Env {
    pub fn new(scenario: Scenario, params: EnvParams) -> Result<Self, Error> {
        scenario.validate()?;
        params.validate()?;
        let xi = params.backscatter.xi();
        let hover = propulsion_power(&params.propulsion, 0.0)?;
        let cruise = propulsion_power(&params.propulsion, params.propulsion.speed_m_s)?;
        let k = scenario.device_count();
        let mut env = Self {
            state: EnvState {
                uav_xy: scenario.start,
                collected: vec![false; k],
                azimuths_rad: vec![0.0; k],
                distances_m: vec![0.0; k],
            },
            scenario,
            params,
            xi,
            hover_power_w: hover,
            cruise_power_w: cruise,
            ma_orientation: (0.0, 0.0),
            ledger: EnergyLedger::new(0.0),
            step_idx: 0,
            termination: None,
            t_fly_s: 0.0,
            t_bc_s: 0.0,
            t_ma_s: 0.0,
            flight_m: 0.0,
            trace: Vec::new(),
        };
        env.reset();
        Ok(env)
    }

    /// Swap in a new scenario and reset. The device count must match so the
    /// observation layout stays fixed for any attached learner.
    pub fn set_scenario(&mut self, scenario: Scenario) -> Result<EnvState, Error> {
        scenario.validate()?;
        if scenario.device_count() != self.scenario.device_count() {
            return Err(Error::Shape(format!(
                "scenario has {} devices, environment was built for {}",
                scenario.device_count(),
                self.scenario.device_count()
            )));
        }
        self.scenario = scenario;
        Ok(self.reset())
    }

    /// Start a fresh episode: UAV at the scenario start, nothing collected,
    /// antenna parked at (0, 0), battery full.
    pub fn reset(&mut self) -> EnvState {
        let k = self.scenario.device_count();
        self.state.uav_xy = self.scenario.start;
        self.state.collected = vec![false; k];
        let (d, phi) = observe_bds(self.uav_xy_tuple(), &self.scenario.bds);
        self.state.distances_m = d;
        self.state.azimuths_rad = phi;
        self.ma_orientation = (0.0, 0.0);
        self.ledger = EnergyLedger::new(self.params.energy_capacity_j);
        self.step_idx = 0;
        self.termination = None;
        self.t_fly_s = 0.0;
        self.t_bc_s = 0.0;
        self.t_ma_s = 0.0;
        self.flight_m = 0.0;
        self.trace.clear();
        self.state.clone()
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn params(&self) -> &EnvParams {
        &self.params
    }

    pub fn mode(&self) -> AntennaMode {
        self.params.mode
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    /// Current UAV pose including the antenna orientation.
    pub fn pose(&self) -> UavPose {
        UavPose {
            x: self.state.uav_xy[0],
            y: self.state.uav_xy[1],
            h: self.scenario.altitude_m,
            ma_theta: self.ma_orientation.0,
            ma_phi: self.ma_orientation.1,
        }
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn done(&self) -> bool {
        self.termination.is_some()
    }

    pub fn termination(&self) -> Option<Termination> {
        self.termination
    }

    pub fn hover_power_w(&self) -> f64 {
        self.hover_power_w
    }

    pub fn cruise_power_w(&self) -> f64 {
        self.cruise_power_w
    }

    /// Backscatter efficiency in effect.
    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn action_dim(&self) -> usize {
        self.params.mode.action_dim()
    }

    pub fn state_dim(&self) -> usize {
        2 + 3 * self.scenario.device_count()
    }

    fn uav_xy_tuple(&self) -> (f64, f64) {
        (self.state.uav_xy[0], self.state.uav_xy[1])
    }

    fn uav_xyz(&self) -> (f64, f64, f64) {
        (self.state.uav_xy[0], self.state.uav_xy[1], self.scenario.altitude_m)
    }

    /// Feature vector for agents: position and distances scaled by the area
    /// side, azimuths by 2π, collected flags as 0/1.
    pub fn features(&self) -> Vec<f64> {
        let side = self.scenario.area_side_m;
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut f = Vec::with_capacity(self.state_dim());
        f.push(self.state.uav_xy[0] / side);
        f.push(self.state.uav_xy[1] / side);
        f.extend(self.state.collected.iter().map(|&o| if o { 1.0 } else { 0.0 }));
        f.extend(self.state.azimuths_rad.iter().map(|&a| a / two_pi));
        f.extend(self.state.distances_m.iter().map(|&d| d / side));
        f
    }

    /// Decode a normalized action vector into physical ranges.
    pub fn decode_action(&self, normalized: &[f64]) -> Result<EnvAction, Error> {
        if normalized.len() != self.action_dim() {
            return Err(Error::Shape(format!(
                "action has {} components, environment expects {}",
                normalized.len(),
                self.action_dim()
            )));
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        let (theta, phi) = match self.params.mode {
            AntennaMode::Ma => (
                affine(normalized[2], 0.0, std::f64::consts::FRAC_PI_2),
                wrap_azimuth(affine(normalized[3], 0.0, two_pi)),
            ),
            AntennaMode::Fpa => (0.0, 0.0),
        };
        Ok(EnvAction {
            leg_factor: affine(normalized[0], 0.0, 1.0),
            heading_rad: affine(normalized[1], 0.0, two_pi),
            theta_init_rad: theta,
            phi_init_rad: phi,
        })
    }

    /// Link budget for one device as seen from an arbitrary position, using
    /// the mode's reader gain (main lobe aimed at the device for MA, omni for
    /// FPA).
    pub fn budget_from(&self, xy: [f64; 2], bd_id: usize) -> Result<LinkBudget, Error> {
        let bd = self
            .scenario
            .bds
            .get(bd_id)
            .ok_or_else(|| Error::Parameter(format!("no device with id {bd_id}")))?;
        let gain = match self.params.mode {
            AntennaMode::Ma => self.params.channel.reader_gain_dbi,
            AntennaMode::Fpa => self.fpa_gain(),
        };
        compute_budget((xy[0], xy[1], self.scenario.altitude_m), bd, &self.params.channel, gain, self.xi)
    }

    fn fpa_gain(&self) -> f64 {
        self.params.fpa_reader_gain_dbi
    }

    /// Whether a device's link closes from a position (both sensitivities).
    pub fn qualifies_from(&self, xy: [f64; 2], bd_id: usize) -> Result<bool, Error> {
        Ok(qualifies(&self.budget_from(xy, bd_id)?, &self.params.channel))
    }

    fn refresh_observation(&mut self) {
        let (d, phi) = observe_bds(self.uav_xy_tuple(), &self.scenario.bds);
        self.state.distances_m = d;
        self.state.azimuths_rad = phi;
    }

    /// Straight-line relocation used by scripted planners: charges flight
    /// time and energy for the actual displacement. The target is clamped
    /// into the area.
    pub fn fly_to(&mut self, target: [f64; 2]) -> (f64, f64) {
        let side = self.scenario.area_side_m;
        let tx = target[0].clamp(0.0, side);
        let ty = target[1].clamp(0.0, side);
        let dx = tx - self.state.uav_xy[0];
        let dy = ty - self.state.uav_xy[1];
        let d = (dx * dx + dy * dy).sqrt();
        let t = d / self.params.propulsion.speed_m_s;
        self.state.uav_xy = [tx, ty];
        self.refresh_observation();
        self.flight_m += d;
        self.t_fly_s += t;
        self.ledger
            .charge(EnergyComponent::Flight, self.cruise_power_w, t)
            .expect("flight charge is non-negative");
        (d, t)
    }

    /// Serve every uncollected device whose link closes from the current
    /// hover point.
    ///
    /// In MA mode the antenna first swings to the commanded initial
    /// orientation, then visits qualified devices in the order of cheapest
    /// next reorientation (ties broken by id), paying reorientation time and
    /// energy plus collection time per device. In FPA mode there is no
    /// antenna motion and devices are served in id order. Hover propulsion
    /// accrues over the whole service interval in both modes.
    pub fn serve_hover_point(&mut self, theta_init: f64, phi_init: f64) -> Result<ServiceReport, Error> {
        let mut report = ServiceReport {
            served_ids: Vec::new(),
            t_ma_s: 0.0,
            t_bc_s: 0.0,
            e_ma_j: 0.0,
            e_comm_j: 0.0,
            e_hover_j: 0.0,
        };

        if self.params.mode == AntennaMode::Ma {
            let init = ma_move(self.ma_orientation, (theta_init, phi_init), &self.params.ma);
            self.ma_orientation = (theta_init, phi_init);
            report.t_ma_s += init.duration_s;
            report.e_ma_j += init.energy_j;
            self.ledger
                .charge(EnergyComponent::Ma, init.power_w, init.duration_s)
                .expect("ma charge is non-negative");
        }

        // Qualification assumes the main lobe aimed at each candidate.
        let uav = self.uav_xyz();
        let mut pending: Vec<(usize, f64, (f64, f64))> = Vec::new();
        for bd in &self.scenario.bds {
            if self.state.collected[bd.id] {
                continue;
            }
            let budget = self.budget_from(self.state.uav_xy, bd.id)?;
            if qualifies(&budget, &self.params.channel) {
                let aim = aim_angles(uav, (bd.x, bd.y));
                pending.push((bd.id, budget.rate_bps, aim));
            }
        }

        match self.params.mode {
            AntennaMode::Ma => {
                while !pending.is_empty() {
                    let mut best = 0;
                    let mut best_t = f64::INFINITY;
                    for (i, (_, _, aim)) in pending.iter().enumerate() {
                        let t = ma_move(self.ma_orientation, *aim, &self.params.ma).duration_s;
                        if t < best_t {
                            best_t = t;
                            best = i;
                        }
                    }
                    let (id, rate, aim) = pending.remove(best);
                    let mv = ma_move(self.ma_orientation, aim, &self.params.ma);
                    self.ma_orientation = aim;
                    report.t_ma_s += mv.duration_s;
                    report.e_ma_j += mv.energy_j;
                    self.ledger
                        .charge(EnergyComponent::Ma, mv.power_w, mv.duration_s)
                        .expect("ma charge is non-negative");
                    self.collect_from(id, rate, &mut report)?;
                }
            }
            AntennaMode::Fpa => {
                for (id, rate, _) in pending {
                    self.collect_from(id, rate, &mut report)?;
                }
            }
        }

        let service_time = report.t_ma_s + report.t_bc_s;
        report.e_hover_j = self.hover_power_w * service_time;

        self.t_ma_s += report.t_ma_s;
        self.t_bc_s += report.t_bc_s;
        self.ledger
            .charge(EnergyComponent::Comm, self.params.comm_power_w, report.t_bc_s)
            .expect("comm charge is non-negative");
        self.ledger
            .charge(EnergyComponent::Hover, self.hover_power_w, service_time)
            .expect("hover charge is non-negative");
        Ok(report)
    }

    fn collect_from(&mut self, id: usize, rate_bps: f64, report: &mut ServiceReport) -> Result<(), Error> {
        let volume = self.scenario.bds[id].volume_bits;
        let t = crate::link::collection_time(volume, rate_bps)?;
        report.t_bc_s += t;
        report.e_comm_j += self.params.comm_power_w * t;
        self.state.collected[id] = true;
        report.served_ids.push(id);
        Ok(())
    }

    /// Advance the episode by one decision step.
    pub fn step(&mut self, normalized_action: &[f64]) -> Result<StepOutcome, Error> {
        if self.done() {
            return Err(Error::Usage("cannot step a finished episode".into()));
        }
        let action = self.decode_action(normalized_action)?;

        let (new_xy, d_u) = apply_move(
            self.state.uav_xy,
            action.leg_factor,
            action.heading_rad,
            self.scenario.area_side_m,
        );
        let t_fly = d_u / self.params.propulsion.speed_m_s;
        self.state.uav_xy = new_xy;
        self.refresh_observation();
        self.flight_m += d_u;
        self.t_fly_s += t_fly;
        let e_flight = self.cruise_power_w * t_fly;
        self.ledger
            .charge(EnergyComponent::Flight, self.cruise_power_w, t_fly)
            .expect("flight charge is non-negative");

        let report = self.serve_hover_point(action.theta_init_rad, action.phi_init_rad)?;

        let all_collected = self.state.collected.iter().all(|&o| o);
        let completed = all_collected && !report.served_ids.is_empty();
        let reward = reward_components(
            report.served_ids.len(),
            completed,
            t_fly,
            report.t_ma_s,
            report.t_bc_s,
            &self.params,
        )
        .total();

        self.step_idx += 1;
        self.termination = if all_collected {
            Some(Termination::Collected)
        } else if !self.ledger.feasible() {
            Some(Termination::EnergyExhausted)
        } else if self.step_idx >= self.params.step_cap {
            Some(Termination::StepCap)
        } else {
            None
        };

        let info = StepInfo {
            n_s: report.served_ids.len(),
            served_ids: report.served_ids.clone(),
            d_u_m: d_u,
            t_fly_s: t_fly,
            t_ma_s: report.t_ma_s,
            t_bc_s: report.t_bc_s,
            e_flight_j: e_flight,
            e_hover_j: report.e_hover_j,
            e_comm_j: report.e_comm_j,
            e_ma_j: report.e_ma_j,
            completed,
            termination: self.termination,
        };
        self.trace.push(TraceRecord {
            step: self.step_idx,
            xy: self.state.uav_xy,
            action: vec![action.leg_factor, action.heading_rad, action.theta_init_rad, action.phi_init_rad],
            reward,
            n_s: info.n_s,
            t_fly,
            t_ma: info.t_ma_s,
            t_bc: info.t_bc_s,
            served_ids: info.served_ids.clone(),
            energies: EnergyBreakdown {
                flight_j: e_flight,
                hover_j: info.e_hover_j,
                comm_j: info.e_comm_j,
                ma_j: info.e_ma_j,
            },
            ma_theta: self.ma_orientation.0,
            ma_phi: self.ma_orientation.1,
        });

        Ok(StepOutcome { state: self.state.clone(), reward, done: self.done(), info })
    }

    /// Totals for the episode so far; meaningful once the episode is done.
    pub fn summary(&self) -> EpisodeSummary {
        let collected = self.state.collected.iter().filter(|&&o| o).count();
        EpisodeSummary {
            t_fly_s: self.t_fly_s,
            t_bc_s: self.t_bc_s,
            t_ma_s: self.t_ma_s,
            total_time_s: self.t_fly_s + self.t_bc_s + self.t_ma_s,
            total_energy_j: self.ledger.total_j(),
            flight_distance_m: self.flight_m,
            steps: self.step_idx,
            collected,
            success: collected == self.scenario.device_count() && self.ledger.feasible(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{collection_time, data_rate, mean_path_loss};
    use crate::world::{generate_scenario, BdSpec};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn scenario_with(bds: Vec<(f64, f64, f64)>, side: f64, h: f64) -> Scenario {
        Scenario {
            area_side_m: side,
            altitude_m: h,
            start: [0.0, 0.0],
            seed: 0,
            bds: bds
                .into_iter()
                .enumerate()
                .map(|(id, (x, y, v))| BdSpec { id, x, y, volume_bits: v, gain_dbi: 0.0 })
                .collect(),
        }
    }

    #[test]
    fn reset_matches_conventions() {
        let s = generate_scenario(7, 20, 200.0, 30.0, (1e5, 5e5)).unwrap();
        let mut env = Env::new(s, EnvParams::default()).unwrap();
        let st = env.reset();
        assert_eq!(st.collected.len(), 20);
        assert!(st.collected.iter().all(|&o| !o));
        assert_eq!(st.uav_xy, [0.0, 0.0]);
        assert_eq!(env.features().len(), 2 + 3 * 20);
        let again = env.reset();
        assert_eq!(st, again);

        let single = scenario_with(vec![(30.0, 0.0, 1e5)], 200.0, 30.0);
        let env = Env::new(single, EnvParams::default()).unwrap();
        assert_eq!(env.state().distances_m[0], 30.0);
        assert_eq!(env.state().azimuths_rad[0], 0.0);
    }

    #[test]
    fn reward_component_golden_values() {
        let params = EnvParams::default();
        // two devices served at 50 apiece
        let rc = reward_components(2, false, 0.0, 0.0, 0.0, &params);
        assert_eq!(rc.service, 100.0);
        // 100 m leg at 10 m/s costs 10 s of flight penalty
        let rc = reward_components(0, false, 100.0 / 10.0, 0.0, 0.0, &params);
        assert_eq!(rc.flight_penalty, -10.0);
        // finishing the task adds the completion bonus
        let rc = reward_components(1, true, 0.0, 0.0, 0.0, &params);
        assert_eq!(rc.completion, 500.0);
        assert_eq!(rc.total(), 550.0);
    }

    #[test]
    fn apply_move_clips_into_area() {
        // d_max for L=200
        let d_max = (2.0f64 * 200.0 * 200.0).sqrt();
        assert!((d_max - 282.842712474619).abs() < 1e-9);

        let (xy, d) = apply_move([0.0, 0.0], 0.5, 0.0, 200.0);
        assert!((xy[0] - 0.5 * d_max).abs() < 1e-9 && xy[1].abs() < 1e-9);
        assert!((d - 0.5 * d_max).abs() < 1e-9);

        let (xy, d) = apply_move([190.0, 190.0], 1.0, PI / 4.0, 200.0);
        assert_eq!(xy, [200.0, 200.0]);
        assert!((d - 200f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn null_step_keeps_position_and_charges_only_init_swing() {
        // device far outside the qualification radius
        let s = scenario_with(vec![(190.0, 190.0, 1e5)], 200.0, 30.0);
        let mut env = Env::new(s, EnvParams::default()).unwrap();
        // a_f = -1 → zero leg; antenna swings to mid-range orientation
        let out = env.step(&[-1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(out.state.uav_xy, [0.0, 0.0]);
        assert_eq!(out.info.n_s, 0);
        assert_eq!(out.info.t_bc_s, 0.0);
        assert!(out.info.t_ma_s > 0.0, "initial reorientation must cost time");
        let expected = reward_components(0, false, 0.0, out.info.t_ma_s, 0.0, env.params()).total();
        assert!((out.reward - expected).abs() < 1e-12);
    }

    #[test]
    fn lone_device_served_from_overhead_matches_link_oracle() {
        // hover directly above the device: θ target is π/2 and t_bc = V/R
        let s = scenario_with(vec![(0.0, 0.0, 2e5)], 200.0, 30.0);
        let params = EnvParams::default();
        let xi = params.backscatter.xi();
        // oracle: mean loss at r = 30 overhead, then rate and time
        let loss = mean_path_loss(30.0, PI / 2.0, &params.channel, 10.0, 0.0).unwrap();
        let rate = data_rate(&params.channel, xi, loss);
        let t_expected = collection_time(2e5, rate).unwrap();

        let mut env = Env::new(s, params).unwrap();
        let out = env.step(&[-1.0, 0.0, 1.0, -1.0]).unwrap();
        assert_eq!(out.info.served_ids, vec![0]);
        assert!(out.done);
        assert!(out.info.completed);
        assert!((out.info.t_bc_s - t_expected).abs() < 1e-12);
        let summary = env.summary();
        assert!(summary.success);
        // reward carries the service and completion bonuses
        assert!(out.reward > 500.0);
    }

    #[test]
    fn service_order_prefers_cheapest_reorientation() {
        // two devices at azimuths 0.1 and 3.0 around a mid-area hover point
        let h = 30.0;
        let d = 10.0;
        let c = 100.0;
        let mut s = scenario_with(
            vec![
                (c + d * 3.0f64.cos(), c + d * 3.0f64.sin(), 1e5),
                (c + d * 0.1f64.cos(), c + d * 0.1f64.sin(), 1e5),
            ],
            200.0,
            h,
        );
        s.start = [c, c];
        let mut env = Env::new(s, EnvParams::default()).unwrap();
        // zero leg; antenna starts the hover at θ=aim elevation, φ=0
        let theta_mid = (h / d).atan();
        let u_theta = theta_mid / (PI / 2.0) * 2.0 - 1.0;
        let out = env.step(&[-1.0, 0.0, u_theta, -1.0]).unwrap();
        // the azimuth-0.1 device (id 1) is the cheaper first swing
        assert_eq!(out.info.served_ids, vec![1, 0]);
        assert!(out.done && out.info.completed);
    }

    #[test]
    fn fpa_mode_takes_two_dim_actions_and_skips_antenna_costs() {
        let s = scenario_with(vec![(3.0, 0.0, 1e5)], 50.0, 10.0);
        let mut params = EnvParams::default();
        params.mode = AntennaMode::Fpa;
        let mut env = Env::new(s, params).unwrap();
        assert_eq!(env.action_dim(), 2);
        assert!(env.step(&[0.0, 0.0, 0.0, 0.0]).is_err(), "4-dim action must be rejected");
        let out = env.step(&[-1.0, 0.0]).unwrap();
        assert_eq!(out.info.t_ma_s, 0.0);
        assert_eq!(out.info.e_ma_j, 0.0);
        assert_eq!(out.info.served_ids, vec![0]);
    }

    #[test]
    fn tiny_battery_fails_episode_on_first_step() {
        let s = scenario_with(vec![(0.0, 190.0, 1e5)], 200.0, 30.0);
        let mut params = EnvParams::default();
        params.energy_capacity_j = 10.0;
        let mut env = Env::new(s, params).unwrap();
        // full-length leg east: ~200 m of flight, device stays far away
        let out = env.step(&[1.0, -1.0, 0.0, 0.0]).unwrap();
        assert!(out.done);
        assert_eq!(out.info.termination, Some(Termination::EnergyExhausted));
        assert!(!env.summary().success);
        assert!(env.step(&[0.0, 0.0, 0.0, 0.0]).is_err(), "stepping a finished episode is an error");
    }

    #[test]
    fn step_cap_truncates() {
        let s = scenario_with(vec![(190.0, 190.0, 1e5)], 200.0, 30.0);
        let mut params = EnvParams::default();
        params.step_cap = 3;
        let mut env = Env::new(s, params).unwrap();
        for i in 0..3 {
            let out = env.step(&[-1.0, 0.0, 0.0, 0.0]).unwrap();
            assert_eq!(out.done, i == 2);
        }
        assert_eq!(env.termination(), Some(Termination::StepCap));
        assert_eq!(env.summary().steps, 3);
    }

    #[test]
    fn deterministic_replay_is_bitwise_identical() {
        let s = generate_scenario(11, 5, 100.0, 30.0, (1e5, 5e5)).unwrap();
        let params = EnvParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let actions: Vec<[f64; 4]> = (0..20)
            .map(|_| {
                [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ]
            })
            .collect();
        let run = |env: &mut Env| {
            env.reset();
            let mut rewards = Vec::new();
            for a in &actions {
                if env.done() {
                    break;
                }
                rewards.push(env.step(a).unwrap().reward);
            }
            (rewards, env.summary())
        };
        let mut env1 = Env::new(s.clone(), params.clone()).unwrap();
        let mut env2 = Env::new(s, params).unwrap();
        let (r1, s1) = run(&mut env1);
        let (r2, s2) = run(&mut env2);
        assert_eq!(r1, r2);
        assert_eq!(s1, s2);
    }

    #[test]
    fn random_episodes_conserve_accounting() {
        // reward decomposition, objective identity, containment, monotone
        // flags, and ledger integrals over random-action episodes
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for ep in 0..20 {
            let s = generate_scenario(100 + ep, 4, 80.0, 30.0, (1e5, 5e5)).unwrap();
            let params = EnvParams::default();
            let mut env = Env::new(s, params.clone()).unwrap();
            let mut seen = env.state().collected.clone();
            let mut sums = (0.0, 0.0, 0.0);
            let mut e_parts = [0.0; 4];
            while !env.done() {
                let a: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                let out = env.step(&a).unwrap();
                // reward decomposition
                let rc = reward_components(
                    out.info.n_s,
                    out.info.completed,
                    out.info.t_fly_s,
                    out.info.t_ma_s,
                    out.info.t_bc_s,
                    &params,
                );
                assert!((out.reward - rc.total()).abs() <= 1e-9 * out.reward.abs().max(1.0));
                // containment
                assert!(out.state.uav_xy.iter().all(|&v| (0.0..=80.0).contains(&v)));
                // collected flags never revert
                for (prev, now) in seen.iter().zip(&out.state.collected) {
                    assert!(!prev | now, "collected flag reverted in episode {ep}");
                }
                seen = out.state.collected.clone();
                sums.0 += out.info.t_fly_s;
                sums.1 += out.info.t_ma_s;
                sums.2 += out.info.t_bc_s;
                e_parts[0] += out.info.e_flight_j;
                e_parts[1] += out.info.e_hover_j;
                e_parts[2] += out.info.e_comm_j;
                e_parts[3] += out.info.e_ma_j;
            }
            let sum_time = sums.0 + sums.1 + sums.2;
            let summary = env.summary();
            assert!((summary.total_time_s - sum_time).abs() <= 1e-9 * sum_time.max(1.0));
            let ledger = env.ledger();
            for (got, want) in [ledger.flight_j, ledger.hover_j, ledger.comm_j, ledger.ma_j].iter().zip(e_parts) {
                assert!((got - want).abs() <= 1e-9 * want.max(1.0));
            }
        }
    }
}
