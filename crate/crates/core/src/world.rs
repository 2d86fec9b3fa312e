//! World geometry: the square target area, backscatter device layout, and the
//! aiming/observation primitives used by the channel model and the MDP.
//!
//! All angles are radians. Azimuths are normalized into `[0, 2π)`. Elevation
//! is measured from the ground plane, so a device directly below the UAV sits
//! at `π/2` (the clamped overhead case).

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::Error;

/// One ground device: position, payload size, and its antenna gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdSpec {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    /// Data volume waiting on the device, in bits.
    pub volume_bits: f64,
    pub gain_dbi: f64,
}

/// Immutable mission world: square area of side `area_side_m`, fixed UAV
/// altitude, device layout, and the seed the layout was drawn from.
///
/// Serializes to a fixed JSON layout
/// `{L, H, start:[x,y], seed, bds:[{id, x, y, volume_bits, gain_dbi}]}`
/// so scenario files are stable across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(rename = "L")]
    pub area_side_m: f64,
    #[serde(rename = "H")]
    pub altitude_m: f64,
    /// UAV start position `[x, y]` in meters.
    pub start: [f64; 2],
    pub seed: u64,
    pub bds: Vec<BdSpec>,
}

impl Scenario {
    /// Number of devices in the scenario.
    pub fn device_count(&self) -> usize {
        self.bds.len()
    }

    /// Check the structural invariants: K ≥ 1, contiguous ids, everything
    /// inside the area, positive volumes.
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.area_side_m > 0.0) {
            return Err(Error::Parameter("area side must be positive".into()));
        }
        if !(self.altitude_m > 0.0) {
            return Err(Error::Parameter("altitude must be positive".into()));
        }
        if self.bds.is_empty() {
            return Err(Error::Parameter("scenario needs at least one device".into()));
        }
        for (i, bd) in self.bds.iter().enumerate() {
            if bd.id != i {
                return Err(Error::Parameter(format!(
                    "device ids must be contiguous from 0, found {} at index {}",
                    bd.id, i
                )));
            }
            if !(bd.volume_bits > 0.0) {
                return Err(Error::Parameter(format!("device {} has non-positive volume", i)));
            }
            if !in_area(bd.x, self.area_side_m) || !in_area(bd.y, self.area_side_m) {
                return Err(Error::Parameter(format!("device {} lies outside the area", i)));
            }
        }
        if !in_area(self.start[0], self.area_side_m) || !in_area(self.start[1], self.area_side_m) {
            return Err(Error::Parameter("UAV start lies outside the area".into()));
        }
        Ok(())
    }
}

fn in_area(v: f64, side: f64) -> bool {
    (0.0..=side).contains(&v)
}

/// UAV pose: horizontal position, fixed altitude, and the current antenna
/// main-lobe orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavPose {
    pub x: f64,
    pub y: f64,
    pub h: f64,
    /// Antenna elevation in `[0, π/2]` (π/2 only as the clamped overhead case).
    pub ma_theta: f64,
    /// Antenna azimuth in `[0, 2π)`.
    pub ma_phi: f64,
}

/// Draw a scenario: `k` devices placed uniformly in `[0, side]²` with data
/// volumes uniform in `volume_range_bits`. Deterministic for a given seed.
///
/// Devices are drawn one at a time (position, then volume), so two scenarios
/// with the same seed and different `k` share their first `min(k1, k2)`
/// devices, and layouts for the same seed scale linearly with `side`.
pub fn generate_scenario(
    seed: u64,
    k: usize,
    side: f64,
    altitude: f64,
    volume_range_bits: (f64, f64),
) -> Result<Scenario, Error> {
    if k == 0 {
        return Err(Error::Parameter("device count must be at least 1".into()));
    }
    if !(side > 0.0) || !(altitude > 0.0) {
        return Err(Error::Parameter("area side and altitude must be positive".into()));
    }
    let (lo, hi) = volume_range_bits;
    if !(lo > 0.0) || !(lo < hi) {
        return Err(Error::Parameter(format!(
            "volume range must satisfy 0 < low < high, got ({lo}, {hi})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bds = (0..k)
        .map(|id| {
            let ux: f64 = rng.random();
            let uy: f64 = rng.random();
            let uv: f64 = rng.random();
            BdSpec {
                id,
                x: ux * side,
                y: uy * side,
                volume_bits: lo + uv * (hi - lo),
                gain_dbi: 0.0,
            }
        })
        .collect();
    Ok(Scenario {
        area_side_m: side,
        altitude_m: altitude,
        start: [0.0, 0.0],
        seed,
        bds,
    })
}

/// Main-lobe orientation that points the antenna straight at a device:
/// elevation from the ground plane and azimuth over `[0, 2π)`.
///
/// With zero horizontal offset the elevation is clamped to `π/2` and the
/// azimuth is 0 by convention.
pub fn aim_angles(uav: (f64, f64, f64), bd: (f64, f64)) -> (f64, f64) {
    let (x, y, h) = uav;
    debug_assert!(h > 0.0);
    let dx = bd.0 - x;
    let dy = bd.1 - y;
    let horiz = (dx * dx + dy * dy).sqrt();
    if horiz == 0.0 {
        return (PI / 2.0, 0.0);
    }
    let theta = (h / horiz).atan();
    let phi = wrap_azimuth(dy.atan2(dx));
    (theta, phi)
}

/// Straight-line distance from the UAV to a ground device.
pub fn slant_range(uav: (f64, f64, f64), bd: (f64, f64)) -> f64 {
    let dx = bd.0 - uav.0;
    let dy = bd.1 - uav.1;
    (dx * dx + dy * dy + uav.2 * uav.2).sqrt()
}

/// Per-device horizontal distance and azimuth as seen from the UAV, ordered
/// by device id. A coincident device reports distance 0 and azimuth 0.
pub fn observe_bds(uav: (f64, f64), bds: &[BdSpec]) -> (Vec<f64>, Vec<f64>) {
    let mut dist = Vec::with_capacity(bds.len());
    let mut azim = Vec::with_capacity(bds.len());
    for bd in bds {
        let dx = bd.x - uav.0;
        let dy = bd.y - uav.1;
        let d = (dx * dx + dy * dy).sqrt();
        dist.push(d);
        azim.push(if d == 0.0 { 0.0 } else { wrap_azimuth(dy.atan2(dx)) });
    }
    (dist, azim)
}

/// Map an angle into `[0, 2π)`.
pub fn wrap_azimuth(phi: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut a = phi % two_pi;
    if a < 0.0 {
        a += two_pi;
    }
    // rem can land exactly on 2π after the correction when phi is a tiny
    // negative number
    if a >= two_pi {
        a = 0.0;
    }
    a
}

/// Shortest angular distance between two azimuths, in `[0, π]`.
pub fn azimuth_distance(a: f64, b: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let d = (wrap_azimuth(a) - wrap_azimuth(b)).abs();
    d.min(two_pi - d)
}
