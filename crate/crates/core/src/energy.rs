//! Rotary-wing propulsion power, antenna actuation costs, and the mission
//! energy ledger.

use serde::{Deserialize, Serialize};

use crate::world::azimuth_distance;
use crate::Error;

/// Rotor and airframe constants for the propulsion power model, plus the
/// cruise speed the UAV flies its legs at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropulsionParams {
    pub tip_speed_m_s: f64,
    /// Mean rotor-induced velocity in hover.
    pub hover_induced_m_s: f64,
    pub air_density_kg_m3: f64,
    pub rotor_solidity: f64,
    pub disc_area_m2: f64,
    pub fuselage_drag_ratio: f64,
    pub profile_drag_coeff: f64,
    pub blade_angular_rad_s: f64,
    pub rotor_radius_m: f64,
    /// Incremental correction factor on induced power.
    pub induced_power_factor: f64,
    pub weight_n: f64,
    pub speed_m_s: f64,
}

impl Default for PropulsionParams {
    fn default() -> Self {
        Self {
            tip_speed_m_s: 80.0,
            hover_induced_m_s: 5.0463,
            air_density_kg_m3: 1.225,
            rotor_solidity: 0.1248,
            disc_area_m2: 0.1256,
            fuselage_drag_ratio: 0.5009,
            profile_drag_coeff: 0.012,
            blade_angular_rad_s: 400.0,
            rotor_radius_m: 0.2,
            induced_power_factor: 0.05,
            weight_n: 7.84,
            speed_m_s: 10.0,
        }
    }
}

impl PropulsionParams {
    pub fn validate(&self) -> Result<(), Error> {
        let fields = [
            ("tip_speed_m_s", self.tip_speed_m_s),
            ("hover_induced_m_s", self.hover_induced_m_s),
            ("air_density_kg_m3", self.air_density_kg_m3),
            ("rotor_solidity", self.rotor_solidity),
            ("disc_area_m2", self.disc_area_m2),
            ("fuselage_drag_ratio", self.fuselage_drag_ratio),
            ("profile_drag_coeff", self.profile_drag_coeff),
            ("blade_angular_rad_s", self.blade_angular_rad_s),
            ("rotor_radius_m", self.rotor_radius_m),
            ("induced_power_factor", self.induced_power_factor),
            ("weight_n", self.weight_n),
            ("speed_m_s", self.speed_m_s),
        ];
        for (name, v) in fields {
            if !(v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Blade profile power and induced power in hover, derived from the rotor
/// constants.
pub fn rotor_constants(p: &PropulsionParams) -> (f64, f64) {
    let p0 = p.profile_drag_coeff
        * p.air_density_kg_m3
        * p.blade_angular_rad_s.powi(3)
        * p.rotor_radius_m.powi(3)
        * p.disc_area_m2
        / 8.0;
    let p1 = (1.0 + p.induced_power_factor) * p.weight_n.powf(1.5)
        / (2.0 * p.air_density_kg_m3 * p.disc_area_m2).sqrt();
    (p0, p1)
}

/// Propulsion power at forward speed `v`: blade profile term, induced term,
/// and fuselage parasite term. `v = 0` gives hover power.
pub fn propulsion_power(p: &PropulsionParams, v: f64) -> Result<f64, Error> {
    if v < 0.0 {
        return Err(Error::Parameter(format!("speed must be non-negative, got {v}")));
    }
    let (p0, p1) = rotor_constants(p);
    let v2 = v * v;
    let profile = p0 * (1.0 + 3.0 * v2 / (p.tip_speed_m_s * p.tip_speed_m_s));
    let v0_2 = p.hover_induced_m_s * p.hover_induced_m_s;
    let induced = p1 * ((1.0 + v2 * v2 / (4.0 * v0_2 * v0_2)).sqrt() - v2 / (2.0 * v0_2)).sqrt();
    let parasite = 0.5
        * p.air_density_kg_m3
        * p.fuselage_drag_ratio
        * p.rotor_solidity
        * p.disc_area_m2
        * v2
        * v;
    Ok(profile + induced + parasite)
}

/// Actuation constants of the movable antenna rotator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaParams {
    pub base_power_w: f64,
    /// Power per radian of elevation travel.
    pub elevation_power_w_rad: f64,
    /// Power per radian of azimuth travel.
    pub azimuth_power_w_rad: f64,
    pub elevation_speed_rad_s: f64,
    pub azimuth_speed_rad_s: f64,
}

impl Default for MaParams {
    fn default() -> Self {
        Self {
            base_power_w: 2.0,
            elevation_power_w_rad: 0.05,
            azimuth_power_w_rad: 0.03,
            elevation_speed_rad_s: std::f64::consts::PI,
            azimuth_speed_rad_s: std::f64::consts::PI,
        }
    }
}

impl MaParams {
    pub fn validate(&self) -> Result<(), Error> {
        let fields = [
            ("base_power_w", self.base_power_w),
            ("elevation_power_w_rad", self.elevation_power_w_rad),
            ("azimuth_power_w_rad", self.azimuth_power_w_rad),
            ("elevation_speed_rad_s", self.elevation_speed_rad_s),
            ("azimuth_speed_rad_s", self.azimuth_speed_rad_s),
        ];
        for (name, v) in fields {
            if !(v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Cost of one antenna reorientation. Elevation travel is the plain absolute
/// difference; azimuth travel takes the short way around the seam, so it
/// never exceeds π.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaMove {
    pub dtheta_rad: f64,
    pub dphi_rad: f64,
    pub duration_s: f64,
    pub power_w: f64,
    pub energy_j: f64,
}

/// Reorientation from one orientation to another: both axes move
/// concurrently, so the move takes as long as the slower axis.
pub fn ma_move(from: (f64, f64), to: (f64, f64), ma: &MaParams) -> MaMove {
    let dtheta = (to.0 - from.0).abs();
    let dphi = azimuth_distance(to.1, from.1);
    let duration = (dtheta / ma.elevation_speed_rad_s).max(dphi / ma.azimuth_speed_rad_s);
    let power = ma.base_power_w + ma.elevation_power_w_rad * dtheta + ma.azimuth_power_w_rad * dphi;
    MaMove { dtheta_rad: dtheta, dphi_rad: dphi, duration_s: duration, power_w: power, energy_j: power * duration }
}

/// Which mission activity an energy charge belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyComponent {
    Flight,
    Hover,
    Comm,
    Ma,
}

/// Running energy totals for one episode against the battery capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub flight_j: f64,
    pub hover_j: f64,
    pub comm_j: f64,
    pub ma_j: f64,
    pub capacity_j: f64,
}

impl EnergyLedger {
    pub fn new(capacity_j: f64) -> Self {
        Self { flight_j: 0.0, hover_j: 0.0, comm_j: 0.0, ma_j: 0.0, capacity_j }
    }

    pub fn total_j(&self) -> f64 {
        self.flight_j + self.hover_j + self.comm_j + self.ma_j
    }

    /// True while the consumed energy fits the capacity.
    pub fn feasible(&self) -> bool {
        self.total_j() <= self.capacity_j
    }

    /// Add `power·duration` to a component. Totals are recorded even when the
    /// charge overruns the budget; the returned flag says whether the ledger
    /// is still feasible afterwards.
    pub fn charge(&mut self, component: EnergyComponent, power_w: f64, duration_s: f64) -> Result<bool, Error> {
        if power_w < 0.0 || duration_s < 0.0 {
            return Err(Error::Parameter(format!(
                "charge needs non-negative power and duration, got {power_w} W for {duration_s} s"
            )));
        }
        let e = power_w * duration_s;
        match component {
            EnergyComponent::Flight => self.flight_j += e,
            EnergyComponent::Hover => self.hover_j += e,
            EnergyComponent::Comm => self.comm_j += e,
            EnergyComponent::Ma => self.ma_j += e,
        }
        Ok(self.feasible())
    }
}
