//! Cost estimation for driving alone and for joining a platoon.
//!
//! Joining is modelled in three phases: adjust to an approach speed, close the
//! gap at that speed, then adjust to the target's speed. The approach speed is
//! the target's speed scaled by a fixed coefficient, at least 1 m/s away from
//! it. The target keeps driving at its current speed throughout.

use serde::{Deserialize, Serialize};

use crate::mobility::{PlatoonId, VehicleId};
use crate::trip_cost::{
    fuel_for_constant_speed, fuel_for_speed_change, fuel_rate, slipstream_factor, total_trip_cost, CostParams,
    FuelModelCoefficients, PlatoonRole, SlipstreamModel, TripEstimate,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JoinPosition {
    /// Become the new leader.
    Front,
    /// Become the new last member.
    Back,
}

impl JoinPosition {
    /// Slipstream role after joining.
    pub fn role(self) -> PlatoonRole {
        match self {
            JoinPosition::Front => PlatoonRole::Leader,
            JoinPosition::Back => PlatoonRole::Last,
        }
    }

    fn sign(self) -> f64 {
        match self {
            JoinPosition::Front => -1.0,
            JoinPosition::Back => 1.0,
        }
    }
}

/// A nearby lone vehicle or platoon that could be joined.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatooningOpportunity {
    /// Vehicle at the end being joined: the leader for front joins, the last
    /// member for back joins.
    pub target_vehicle: VehicleId,
    pub target_platoon: Option<PlatoonId>,
    pub join_position: JoinPosition,
    pub target_speed: f64,
    pub target_desired_speed: f64,
    /// Distance the joiner has to close to reach its slot.
    pub gap_to_target: f64,
    /// Distance between joiner and the end being joined.
    pub distance: f64,
    pub member_destinations: Vec<f64>,
    pub platoon_size: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ManeuverConfig {
    pub approach_coefficient: f64,
    pub approach_accel_mps2: f64,
    pub approach_decel_mps2: f64,
    pub max_speed_mps: f64,
    pub min_speed_difference_mps: f64,
}

impl Default for ManeuverConfig {
    fn default() -> Self {
        Self {
            approach_coefficient: 0.15,
            approach_accel_mps2: 2.5,
            approach_decel_mps2: 2.0,
            max_speed_mps: 55.0,
            min_speed_difference_mps: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct JoinPhase {
    pub time_s: f64,
    pub distance_m: f64,
    pub fuel_l: f64,
}

impl std::ops::Add for JoinPhase {
    type Output = JoinPhase;

    fn add(self, o: Self) -> Self {
        JoinPhase {
            time_s: self.time_s + o.time_s,
            distance_m: self.distance_m + o.distance_m,
            fuel_l: self.fuel_l + o.fuel_l,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JoinEstimate {
    pub adjust: JoinPhase,
    pub approach: JoinPhase,
    pub settle: JoinPhase,
    pub total: JoinPhase,
    pub approach_speed: f64,
}

impl JoinEstimate {
    pub fn trip_estimate(&self) -> TripEstimate {
        TripEstimate {
            fuel_liters: self.total.fuel_l,
            duration_hours: self.total.time_s / 3600.0,
            distance_m: self.total.distance_m,
        }
    }
}

/// Approach speed for joining at `position` a target driving `target_speed`,
/// or `None` if it would leave `(0, max_speed]`.
pub fn approach_speed_for(target_speed: f64, position: JoinPosition, cfg: &ManeuverConfig) -> Option<f64> {
    let min_diff = cfg.min_speed_difference_mps;
    let v_c = match position {
        JoinPosition::Back => (target_speed * (1.0 + cfg.approach_coefficient))
            .max(target_speed + min_diff)
            .min(cfg.max_speed_mps),
        JoinPosition::Front => (target_speed * (1.0 - cfg.approach_coefficient)).min(target_speed - min_diff),
    };
    let valid = v_c > 0.0 && v_c <= cfg.max_speed_mps && (v_c - target_speed).abs() >= min_diff - 1e-12;
    valid.then_some(v_c)
}

/// Closed-form three-phase join estimate, `None` when the target cannot be reached.
pub fn estimate_join_maneuver(
    joiner_speed: f64,
    opportunity: &PlatooningOpportunity,
    cfg: &ManeuverConfig,
    coeffs: &FuelModelCoefficients,
) -> Option<JoinEstimate> {
    let v_t = opportunity.target_speed;
    let gap = opportunity.gap_to_target;
    if !(joiner_speed.is_finite() && v_t.is_finite() && gap.is_finite()) || joiner_speed < 0.0 || v_t < 0.0 {
        return None;
    }
    if gap <= 0.0 && joiner_speed == v_t {
        let zero = JoinPhase::default();
        return Some(JoinEstimate { adjust: zero, approach: zero, settle: zero, total: zero, approach_speed: v_t });
    }
    let position = opportunity.join_position;
    let v_c = approach_speed_for(v_t, position, cfg)?;
    let ramp = |from: f64, to: f64| {
        let a = if to > from { cfg.approach_accel_mps2 } else { cfg.approach_decel_mps2 };
        fuel_for_speed_change(from, to, a, coeffs).ok()
    };
    let first = ramp(joiner_speed, v_c)?;
    let third = ramp(v_c, v_t)?;

    // Relative distance closed by the two speed changes alone.
    let s = position.sign();
    let closed = s * (first.distance_m + third.distance_m - v_t * (first.time_s + third.time_s));
    let t2 = ((gap.max(0.0) - closed) / (v_c - v_t).abs()).max(0.0);

    let adjust = JoinPhase { time_s: first.time_s, distance_m: first.distance_m, fuel_l: first.fuel_l };
    let approach = JoinPhase { time_s: t2, distance_m: v_c * t2, fuel_l: fuel_rate(v_c, 0.0, coeffs) * t2 };
    let settle = JoinPhase { time_s: third.time_s, distance_m: third.distance_m, fuel_l: third.fuel_l };
    Some(JoinEstimate { adjust, approach, settle, total: adjust + approach + settle, approach_speed: v_c })
}

/// What the estimators need to know about the searching vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JoinerView {
    pub id: VehicleId,
    pub position: f64,
    pub speed: f64,
    pub desired_speed: f64,
    pub destination: f64,
    pub cost: CostParams,
}

impl JoinerView {
    pub fn remaining_distance(&self) -> f64 {
        (self.destination - self.position).max(0.0)
    }
}

/// Cost of driving `remaining_distance` alone at the desired speed.
pub fn estimate_individual_cost(
    remaining_distance: f64,
    desired_speed: f64,
    params: &CostParams,
    coeffs: &FuelModelCoefficients,
) -> f64 {
    if remaining_distance <= 0.0 {
        return 0.0;
    }
    let fuel = fuel_for_constant_speed(desired_speed, remaining_distance, coeffs).unwrap_or(f64::INFINITY);
    let est = TripEstimate {
        fuel_liters: fuel,
        duration_hours: remaining_distance / desired_speed / 3600.0,
        distance_m: remaining_distance,
    };
    total_trip_cost(&est, params).unwrap_or(f64::INFINITY)
}

/// Part of the remaining trip driven inside the target platoon.
pub fn shared_distance(own_remaining: f64, furthest_member_remaining: f64, join_distance: f64) -> f64 {
    (own_remaining.min(furthest_member_remaining) - join_distance).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlatoonOptionEstimate {
    pub join: JoinEstimate,
    pub shared_m: f64,
    pub remaining_m: f64,
    pub maneuver_cost: f64,
    pub shared_cost: f64,
    pub remaining_cost: f64,
    pub total_cost: f64,
}

/// Maneuver + shared-distance + remaining-distance cost of joining `opportunity`.
pub fn estimate_platoon_option(
    joiner: &JoinerView,
    opportunity: &PlatooningOpportunity,
    maneuver: &ManeuverConfig,
    coeffs: &FuelModelCoefficients,
    slipstream: &SlipstreamModel,
) -> Option<PlatoonOptionEstimate> {
    let join = estimate_join_maneuver(joiner.speed, opportunity, maneuver, coeffs)?;
    let own = joiner.remaining_distance();
    let furthest = opportunity
        .member_destinations
        .iter()
        .map(|d| d - joiner.position)
        .fold(0.0f64, f64::max);
    let shared_m = shared_distance(own, furthest, join.total.distance_m);
    let remaining_m = (own - shared_m - join.total.distance_m).max(0.0);

    let maneuver_cost = total_trip_cost(&join.trip_estimate(), &joiner.cost).ok()?;
    let platoon_speed = opportunity.target_desired_speed;
    let shared_cost = if shared_m > 0.0 {
        let factor = slipstream_factor(opportunity.join_position.role(), slipstream);
        let est = TripEstimate {
            fuel_liters: fuel_for_constant_speed(platoon_speed, shared_m, coeffs).ok()? * factor,
            duration_hours: shared_m / platoon_speed / 3600.0,
            distance_m: shared_m,
        };
        total_trip_cost(&est, &joiner.cost).ok()?
    } else {
        0.0
    };
    let remaining_cost = estimate_individual_cost(remaining_m, joiner.desired_speed, &joiner.cost, coeffs);
    Some(PlatoonOptionEstimate {
        join,
        shared_m,
        remaining_m,
        maneuver_cost,
        shared_cost,
        remaining_cost,
        total_cost: maneuver_cost + shared_cost + remaining_cost,
    })
}
