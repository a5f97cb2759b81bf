use serde::{Deserialize, Serialize};

use crate::formation::JoinManeuver;
use crate::scenario::TripPlan;
use crate::trip_cost::CostParams;

pub type VehicleId = u64;
pub type PlatoonId = u64;

/// What a driver wants from a trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverProfile {
    pub cost: CostParams,
    pub desired_speed: f64,
    pub trip: TripPlan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DrivingMode {
    Human,
    Acc,
    CaccFollower,
}

impl DrivingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DrivingMode::Human => "human",
            DrivingMode::Acc => "acc",
            DrivingMode::CaccFollower => "cacc-follower",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Vehicle {
    pub id: VehicleId,
    /// Front bumper position along the road.
    pub position: f64,
    /// Where the vehicle entered the road.
    pub start_position: f64,
    pub lane: usize,
    pub speed: f64,
    pub acceleration: f64,
    pub length: f64,
    pub mode: DrivingMode,
    pub profile: DriverProfile,
    pub fuel_l: f64,
    pub depart_time: f64,
    pub platoon: Option<PlatoonId>,
    pub maneuver: Option<JoinManeuver>,
    /// Another vehicle is currently maneuvering to join this one (or its platoon).
    pub reserved_by: Option<VehicleId>,
    /// Seconds after departure at which formation runs (modulo the interval).
    pub formation_offset: u32,
    pub time_in_platoon: f64,
}

impl Vehicle {
    pub fn rear(&self) -> f64 {
        self.position - self.length
    }

    pub fn remaining_distance(&self) -> f64 {
        (self.profile.trip.destination_m - self.position).max(0.0)
    }

    pub fn is_searching(&self) -> bool {
        self.platoon.is_none() && self.maneuver.is_none() && self.reserved_by.is_none()
    }
}

/// Vehicles driving together in one lane, front to rear.
#[derive(Debug, Clone, PartialEq)]
pub struct Platoon {
    pub id: PlatoonId,
    pub members: Vec<VehicleId>,
    pub desired_speed: f64,
    pub reserved_by: Option<VehicleId>,
}

impl Platoon {
    pub fn leader(&self) -> VehicleId {
        self.members[0]
    }

    pub fn last(&self) -> VehicleId {
        *self.members.last().expect("platoons are never empty")
    }
}
