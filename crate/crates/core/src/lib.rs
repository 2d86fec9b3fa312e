//! Simulation and training engine for a UAV that collects data from ground
//! backscatter devices through a mechanically steerable directional antenna.
//!
//! The crate is organized bottom-up:
//!
//! - [`world`]: target area, device layouts, aiming geometry
//! - [`link`]: probabilistic air-to-ground channel and backscatter budget
//! - [`energy`]: rotary-wing propulsion power, antenna actuation, battery ledger
//! - [`env`](mod@env): the episodic decision process built from the three above
//! - [`neural`]: dense networks, squashed Gaussian policy head, Adam
//! - [`sac`]: soft actor-critic training loop, replay buffer, and a plain
//!   actor-critic baseline
//!
//! Everything is deterministic given explicit seeds: scenario layout, action
//! sampling, minibatch draws, and parameter initialization all flow from
//! seeded counter-based generators, so identical inputs reproduce identical
//! runs bit for bit.

pub mod energy;
pub mod env;
pub mod link;
pub mod neural;
pub mod sac;
pub mod world;

use thiserror::Error as ThisError;

/// Crate-wide error type.
#[derive(Debug, ThisError)]
pub enum Error {
    /// A numeric argument or configuration value is out of range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// A link cannot carry data (zero rate).
    #[error("infeasible link: {0}")]
    InfeasibleLink(String),
    /// An API was called in an invalid order or on finished state.
    #[error("usage error: {0}")]
    Usage(String),
    /// Vector or matrix dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Training produced a non-finite quantity.
    #[error("training error: {0}")]
    Training(String),
}
