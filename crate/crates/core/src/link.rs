//! Air-to-ground channel and backscatter link budget.
//!
//! The channel is the probabilistic LoS/NLoS model: a Friis-style free-space
//! term with antenna gains inside the square root, an excess loss per
//! visibility condition, and a logistic LoS probability driven by the
//! elevation angle in degrees. Mean path loss is the probability-weighted sum
//! of the two dB values. The monostatic backscatter round trip applies that
//! mean loss twice, once per hop, together with the backscatter efficiency.

use serde::{Deserialize, Serialize};

use crate::world::{aim_angles, slant_range, BdSpec};
use crate::Error;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// dB value to linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio to dB.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Transmit power in watts to dBm.
pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1000.0).log10()
}

/// RF and receiver parameters shared by every link in a mission.
///
/// dB/dBm quantities carry the unit in the field name; gains are dBi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    pub carrier_freq_hz: f64,
    /// Logistic LoS-probability offset (environment constant, degree scale).
    pub env_rho: f64,
    /// Logistic LoS-probability slope (environment constant).
    pub env_beta: f64,
    pub excess_loss_los_db: f64,
    pub excess_loss_nlos_db: f64,
    pub noise_dbm: f64,
    pub bandwidth_hz: f64,
    pub carrier_power_w: f64,
    /// Reader (UAV) receive sensitivity.
    pub reader_sensitivity_dbm: f64,
    /// Device activation sensitivity.
    pub bd_sensitivity_dbm: f64,
    /// Reader antenna main-lobe gain, applied when the antenna is aimed.
    pub reader_gain_dbi: f64,
}

impl ChannelParams {
    /// Carrier wavelength in meters.
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.carrier_freq_hz > 0.0) {
            return Err(Error::Parameter("carrier frequency must be positive".into()));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::Parameter("bandwidth must be positive".into()));
        }
        if !(self.carrier_power_w > 0.0) {
            return Err(Error::Parameter("carrier power must be positive".into()));
        }
        if self.excess_loss_nlos_db < self.excess_loss_los_db {
            return Err(Error::Parameter("NLoS excess loss must be >= LoS excess loss".into()));
        }
        Ok(())
    }
}

impl Default for ChannelParams {
    /// Urban 2 GHz defaults used throughout the experiments.
    fn default() -> Self {
        Self {
            carrier_freq_hz: 2.0e9,
            env_rho: 9.61,
            env_beta: 0.16,
            excess_loss_los_db: 1.0,
            excess_loss_nlos_db: 20.0,
            noise_dbm: -100.0,
            bandwidth_hz: 20.0e6,
            carrier_power_w: 1.0,
            reader_sensitivity_dbm: -100.0,
            bd_sensitivity_dbm: -50.0,
            reader_gain_dbi: 10.0,
        }
    }
}

/// Backscatter efficiency inputs: polarization mismatch χ, modulation factor
/// M, and the on-object penalty in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackscatterCoeff {
    pub chi: f64,
    pub modulation_m: f64,
    pub on_object_penalty_db: f64,
}

impl BackscatterCoeff {
    /// Efficiency ξ = χ²·M / Θ² with Θ the linear on-object penalty.
    pub fn xi(&self) -> f64 {
        let theta_lin = db_to_linear(self.on_object_penalty_db);
        self.chi * self.chi * self.modulation_m / (theta_lin * theta_lin)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let xi = self.xi();
        if !(xi > 0.0 && xi <= 1.0) {
            return Err(Error::Parameter(format!("backscatter efficiency {xi} outside (0, 1]")));
        }
        Ok(())
    }
}

impl Default for BackscatterCoeff {
    fn default() -> Self {
        Self { chi: 0.5, modulation_m: 0.5, on_object_penalty_db: 0.0 }
    }
}

/// Everything derived for one UAV-device link at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub bd_id: usize,
    pub elevation_rad: f64,
    pub slant_range_m: f64,
    pub p_los: f64,
    pub mean_loss_db: f64,
    pub rx_bd_dbm: f64,
    pub rx_reader_dbm: f64,
    pub rate_bps: f64,
}

/// LoS probability as a function of the elevation angle (radians in, the
/// logistic itself runs on degrees). Strictly increasing on `[0, π/2]` with
/// values in `(0, 1)`.
pub fn los_probability(elevation_rad: f64, rho: f64, beta: f64) -> f64 {
    let deg = elevation_rad.to_degrees();
    1.0 / (1.0 + rho * (-beta * (deg - rho)).exp())
}

/// One-hop path loss in dB: free-space term with linear antenna gains inside
/// the square root, plus the excess loss for the visibility condition.
pub fn path_loss(r_m: f64, lambda_m: f64, g_tr_dbi: f64, g_bd_dbi: f64, eta_db: f64) -> Result<f64, Error> {
    if !(r_m > 0.0) {
        return Err(Error::Parameter(format!("range must be positive, got {r_m}")));
    }
    let g = (db_to_linear(g_tr_dbi) * db_to_linear(g_bd_dbi)).sqrt();
    Ok(20.0 * (4.0 * std::f64::consts::PI * r_m / (lambda_m * g)).log10() + eta_db)
}

/// Probability-weighted mean of the LoS and NLoS path losses, combined in the
/// dB domain.
pub fn mean_path_loss(r_m: f64, elevation_rad: f64, params: &ChannelParams, reader_gain_dbi: f64, g_bd_dbi: f64) -> Result<f64, Error> {
    let lambda = params.wavelength_m();
    let l_los = path_loss(r_m, lambda, reader_gain_dbi, g_bd_dbi, params.excess_loss_los_db)?;
    let l_nlos = path_loss(r_m, lambda, reader_gain_dbi, g_bd_dbi, params.excess_loss_nlos_db)?;
    let p = los_probability(elevation_rad, params.env_rho, params.env_beta);
    Ok(p * l_los + (1.0 - p) * l_nlos)
}

/// Received power at each end of the round trip, in dBm: the device sees the
/// carrier after one hop, the reader sees the backscattered signal after the
/// second hop scaled by the efficiency ξ.
pub fn received_powers(params: &ChannelParams, xi: f64, mean_loss_db: f64) -> (f64, f64) {
    let tx_dbm = watts_to_dbm(params.carrier_power_w);
    let rx_bd = tx_dbm - mean_loss_db;
    let rx_reader = rx_bd + linear_to_db(xi) - mean_loss_db;
    (rx_bd, rx_reader)
}

/// Both sensitivity constraints, inclusive at the threshold.
pub fn qualifies(budget: &LinkBudget, params: &ChannelParams) -> bool {
    budget.rx_reader_dbm >= params.reader_sensitivity_dbm && budget.rx_bd_dbm >= params.bd_sensitivity_dbm
}

/// Backscatter data rate in bits/s: Shannon rate of the round trip with the
/// mean loss applied twice and the efficiency ξ in the numerator.
pub fn data_rate(params: &ChannelParams, xi: f64, mean_loss_db: f64) -> f64 {
    let snr_db = watts_to_dbm(params.carrier_power_w) + linear_to_db(xi) - 2.0 * mean_loss_db - params.noise_dbm;
    params.bandwidth_hz * (1.0 + db_to_linear(snr_db)).log2()
}

/// Time to drain a device's payload at a fixed rate.
pub fn collection_time(volume_bits: f64, rate_bps: f64) -> Result<f64, Error> {
    if !(rate_bps > 0.0) {
        return Err(Error::InfeasibleLink(format!("rate {rate_bps} bit/s cannot carry data")));
    }
    Ok(volume_bits / rate_bps)
}

/// Full budget for one device as seen from a UAV position, with the reader
/// gain the caller selects (main-lobe gain when aimed, omni gain otherwise).
pub fn compute_budget(
    uav: (f64, f64, f64),
    bd: &BdSpec,
    params: &ChannelParams,
    reader_gain_dbi: f64,
    xi: f64,
) -> Result<LinkBudget, Error> {
    let (elevation, _) = aim_angles(uav, (bd.x, bd.y));
    let r = slant_range(uav, (bd.x, bd.y));
    let mean_loss = mean_path_loss(r, elevation, params, reader_gain_dbi, bd.gain_dbi)?;
    let (rx_bd, rx_reader) = received_powers(params, xi, mean_loss);
    Ok(LinkBudget {
        bd_id: bd.id,
        elevation_rad: elevation,
        slant_range_m: r,
        p_los: los_probability(elevation, params.env_rho, params.env_beta),
        mean_loss_db: mean_loss,
        rx_bd_dbm: rx_bd,
        rx_reader_dbm: rx_reader,
        rate_bps: data_rate(params, xi, mean_loss),
    })
}
