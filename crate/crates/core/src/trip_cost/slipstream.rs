use serde::{Deserialize, Serialize};

/// Position of a vehicle with respect to a platoon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlatoonRole {
    Alone,
    Leader,
    Mid,
    Last,
}

/// Relative fuel reductions from driving in a slipstream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlipstreamModel {
    /// 27% drag reduction in the middle of a platoon times a 0.46 drag/fuel elasticity.
    pub mid_platoon_reduction: f64,
    pub leader_reduction: f64,
    pub last_vehicle_reduction: f64,
}

impl Default for SlipstreamModel {
    fn default() -> Self {
        Self { mid_platoon_reduction: 0.1242, leader_reduction: 0.05, last_vehicle_reduction: 0.11 }
    }
}

impl SlipstreamModel {
    pub fn is_valid(&self) -> bool {
        [self.mid_platoon_reduction, self.leader_reduction, self.last_vehicle_reduction]
            .iter()
            .all(|r| (0.0..1.0).contains(r))
    }
}

/// Multiplier applied to the fuel rate of a vehicle in `role`.
pub fn slipstream_factor(role: PlatoonRole, model: &SlipstreamModel) -> f64 {
    match role {
        PlatoonRole::Alone => 1.0,
        PlatoonRole::Leader => 1.0 - model.leader_reduction,
        PlatoonRole::Mid => 1.0 - model.mid_platoon_reduction,
        PlatoonRole::Last => 1.0 - model.last_vehicle_reduction,
    }
}
