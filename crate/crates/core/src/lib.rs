//! Simulation and optimisation library for a caching-enabled multi-HAP
//! content-delivery network.
//!
//! Each slot a PPO agent picks cache placements, a conic program routes the
//! resulting network-coded multicast sessions over the FSO backhaul and an
//! SDP relaxation designs the RF multicast beamformers. The [`harness`]
//! module ties these together into episodes, baselines and sweeps.

pub mod beamforming;
pub mod channel;
pub mod conic;
mod error;
pub mod harness;
pub mod ppo;
pub mod rng;
pub mod routing;
pub mod topology;
pub mod traffic;

pub use error::{Error, Result};
