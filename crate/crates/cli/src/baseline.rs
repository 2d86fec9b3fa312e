//! Scripted mission planner used as a deterministic reference point for the
//! learned policies and for the antenna-mode comparisons.
//!
//! The plan is greedy: fly straight toward the nearest uncollected device,
//! stop at the farthest point on that leg where its link closes (binary
//! search at 0.1 m resolution), serve every device that qualifies from the
//! stop, repeat. In MA mode the first antenna swing of each hover aims at the
//! nearest qualified device.

use mabd_core::env::{AntennaMode, Env, EnvParams, EpisodeSummary};
use mabd_core::world::{aim_angles, Scenario};

use crate::runio::TrajectoryLeg;
use crate::CliError;

/// Stop-point search resolution along a leg, in meters.
pub const STOP_RESOLUTION_M: f64 = 0.1;

/// A finished (or failed) scripted mission.
#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub summary: EpisodeSummary,
    pub legs: Vec<TrajectoryLeg>,
    pub hover_points: usize,
}

/// Farthest point from the device along the segment `from → device` where the
/// link still closes. `None` when the device is already qualified at `from`
/// is not possible (callers check that first); `Err` when it never qualifies,
/// even directly overhead.
fn stop_point(env: &Env, from: [f64; 2], bd_id: usize) -> Result<[f64; 2], CliError> {
    let bd = &env.scenario().bds[bd_id];
    let to = [bd.x, bd.y];
    let leg = ((to[0] - from[0]).powi(2) + (to[1] - from[1]).powi(2)).sqrt();
    // d measures distance from the device back toward `from`
    let point_at = |d: f64| -> [f64; 2] {
        if leg <= f64::EPSILON {
            to
        } else {
            [to[0] + (from[0] - to[0]) * d / leg, to[1] + (from[1] - to[1]) * d / leg]
        }
    };
    if env.qualifies_from(from, bd_id)? {
        return Ok(from);
    }
    if !env.qualifies_from(to, bd_id)? {
        return Err(CliError::InfeasibleScenario(format!(
            "device {bd_id} never qualifies in {:?} mode, even from directly overhead",
            env.mode()
        )));
    }
    let mut lo = 0.0; // qualifies
    let mut hi = leg; // does not
    while hi - lo > STOP_RESOLUTION_M {
        let mid = 0.5 * (lo + hi);
        if env.qualifies_from(point_at(mid), bd_id)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(point_at(lo))
}

/// Run the scripted planner on one scenario.
pub fn greedy_baseline(scenario: &Scenario, params: &EnvParams) -> Result<BaselineOutcome, CliError> {
    let mut env = Env::new(scenario.clone(), params.clone())?;
    env.reset();
    let mut legs = Vec::new();
    let mut hover_points = 0usize;

    while env.state().collected.iter().any(|&o| !o) {
        let from = env.state().uav_xy;
        // nearest uncollected device by horizontal distance, ties by id
        let target = env
            .state()
            .collected
            .iter()
            .enumerate()
            .filter(|(_, &o)| !o)
            .map(|(id, _)| (id, env.state().distances_m[id]))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(std::cmp::Ordering::Equal))
            .map(|(id, _)| id)
            .expect("loop guard guarantees an uncollected device");

        let stop = stop_point(&env, from, target)?;
        let (d_u, t_fly) = env.fly_to(stop);

        let report = match env.mode() {
            AntennaMode::Ma => {
                // first swing aims at the nearest qualified device
                let mut nearest: Option<(usize, f64)> = None;
                for (id, &o) in env.state().collected.iter().enumerate() {
                    if o || !env.qualifies_from(env.state().uav_xy, id)? {
                        continue;
                    }
                    let d = env.state().distances_m[id];
                    if nearest.map_or(true, |(_, best)| d < best) {
                        nearest = Some((id, d));
                    }
                }
                let (aim_id, _) = nearest.expect("the leg target qualifies at the stop point");
                let bd = &env.scenario().bds[aim_id];
                let uav = (env.state().uav_xy[0], env.state().uav_xy[1], scenario.altitude_m);
                let (theta, phi) = aim_angles(uav, (bd.x, bd.y));
                env.serve_hover_point(theta, phi)?
            }
            AntennaMode::Fpa => env.serve_hover_point(0.0, 0.0)?,
        };
        hover_points += 1;

        let pose = env.pose();
        legs.push(TrajectoryLeg {
            index: legs.len() as u32,
            from,
            to: env.state().uav_xy,
            leg_m: d_u,
            n_served: report.served_ids.len(),
            served_ids: report.served_ids.clone(),
            t_fly_s: t_fly,
            t_ma_s: report.t_ma_s,
            t_bc_s: report.t_bc_s,
            ma_theta_rad: pose.ma_theta,
            ma_phi_rad: pose.ma_phi,
        });

        if !env.ledger().feasible() {
            break;
        }
    }

    Ok(BaselineOutcome { summary: env.summary(), legs, hover_points })
}
