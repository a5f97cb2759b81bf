//! Freeway platooning simulator with a monetary trip-cost metric.
//!
//! The crate is organised bottom-up:
//!
//! * [`trip_cost`] prices fuel and time and models fuel consumption.
//! * [`scenario`] builds the ramped freeway and the driver demand.
//! * [`mobility`] moves vehicles (Krauss, ACC and CACC) and changes lanes.
//! * [`formation`] decides which platoon, if any, a vehicle joins and runs the join.
//! * [`experiment`] runs sweeps and aggregates per-vehicle outcomes into gain tables.

pub mod config;
pub mod error;
pub mod experiment;
pub mod formation;
pub mod mobility;
pub mod scenario;
pub mod trip_cost;

pub use error::{Error, Result};
