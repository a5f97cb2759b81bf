//! Vehicles, longitudinal control, lane changes and the world stepper.

pub mod dynamics;
mod lanes;
pub mod vehicle;
pub mod world;

pub use dynamics::{acc_accel, approach_speed, cacc_accel, krauss_speed, DynamicsConfig, Leader};
pub use vehicle::{DriverProfile, DrivingMode, Platoon, PlatoonId, Vehicle, VehicleId};
pub use world::{Approach, Counters, TraceRow, TripOutcome, World, WorldConfig};
