//! Compute/airframe co-design models for autonomous micro aerial vehicles.
//!
//! - [`cig`]: the cyber-physical interaction graph and its impact paths.
//! - [`pipeline_models`]: sensor-to-actuation timing and the safe-velocity bound.
//! - [`vehicle_dynamics`]: thrust-limited acceleration, rotor power and the battery.
//! - [`catalog`]: compute platforms, airframes and power-model presets.
//! - [`mission_sim`]: time-stepped mission simulation with knobs and offload.
//! - [`dse`]: design-space sweeps, gradients and sensitivity.

pub mod catalog;
pub mod cig;
pub mod dse;
pub mod mission_sim;
pub mod pipeline_models;
pub mod vehicle_dynamics;
