//! Link-level baseband simulator for delay alignment modulation.

pub mod beamforming;
pub mod campaign;
pub mod channel;
pub mod config;
pub mod dsp;
pub mod metrics;
pub mod modulation;
pub mod report;
pub mod rng;
pub mod rx;
pub mod tx;
