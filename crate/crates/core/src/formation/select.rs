//! The two vehicle-to-platoon assignment rules.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::estimate::{
    estimate_individual_cost, estimate_join_maneuver, estimate_platoon_option, JoinerView, ManeuverConfig,
    PlatoonOptionEstimate, PlatooningOpportunity,
};
use crate::trip_cost::{FuelModelCoefficients, SlipstreamModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    StayAlone,
    /// Join the opportunity at this index of the list passed in.
    Join(usize),
}

/// Outcome of the trip-cost rule with the numbers behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct TripCostDecision {
    pub individual_cost: f64,
    /// Cheapest computable platoon option, feasible or not.
    pub best: Option<(usize, PlatoonOptionEstimate)>,
    pub decision: Decision,
}

/// Greedy trip-cost assignment: join the cheapest option, but only if it is
/// strictly cheaper than driving alone. Ties go to the shorter join, then to
/// the lower target id.
pub fn select_assignment_trip_cost(
    joiner: &JoinerView,
    opportunities: &[PlatooningOpportunity],
    maneuver: &ManeuverConfig,
    coeffs: &FuelModelCoefficients,
    slipstream: &SlipstreamModel,
) -> TripCostDecision {
    let individual_cost =
        estimate_individual_cost(joiner.remaining_distance(), joiner.desired_speed, &joiner.cost, coeffs);
    let best = opportunities
        .iter()
        .enumerate()
        .filter_map(|(i, o)| estimate_platoon_option(joiner, o, maneuver, coeffs, slipstream).map(|e| (i, e)))
        .min_by(|(i, a), (j, b)| {
            a.total_cost
                .total_cmp(&b.total_cost)
                .then(a.join.total.distance_m.total_cmp(&b.join.total.distance_m))
                .then(opportunities[*i].target_vehicle.cmp(&opportunities[*j].target_vehicle))
        });
    let decision = match &best {
        Some((i, e)) if e.total_cost < individual_cost => Decision::Join(*i),
        _ => Decision::StayAlone,
    };
    TripCostDecision { individual_cost, best, decision }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SimilarityConfig {
    /// Maximum relative deviation of desired speeds.
    pub speed_window: f64,
    pub search_range_m: f64,
    /// Weight of the speed term against the distance term.
    pub alpha: f64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self { speed_window: 0.2, search_range_m: 1000.0, alpha: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityDecision {
    /// Score of the chosen candidate.
    pub score: Option<f64>,
    pub decision: Decision,
}

/// Similarity score of a candidate, `None` when it falls outside the speed
/// window or the search range.
pub fn similarity_score(joiner: &JoinerView, opportunity: &PlatooningOpportunity, cfg: &SimilarityConfig) -> Option<f64> {
    let deviation = (opportunity.target_desired_speed - joiner.desired_speed).abs() / joiner.desired_speed;
    if deviation > cfg.speed_window || opportunity.distance > cfg.search_range_m {
        return None;
    }
    let speed_term = if cfg.speed_window > 0.0 { deviation / cfg.speed_window } else { 0.0 };
    Some(cfg.alpha * speed_term + (1.0 - cfg.alpha) * opportunity.distance / cfg.search_range_m)
}

/// Similarity-based assignment: join the most similar candidate whenever one
/// passes the filter. Candidates whose join maneuver cannot be flown are
/// skipped. Ties go to the nearer candidate, then to the lower target id.
pub fn select_assignment_similarity(
    joiner: &JoinerView,
    opportunities: &[PlatooningOpportunity],
    cfg: &SimilarityConfig,
    maneuver: &ManeuverConfig,
    coeffs: &FuelModelCoefficients,
) -> SimilarityDecision {
    let best = opportunities
        .iter()
        .enumerate()
        .filter(|(_, o)| estimate_join_maneuver(joiner.speed, o, maneuver, coeffs).is_some())
        .filter_map(|(i, o)| similarity_score(joiner, o, cfg).map(|s| (i, s)))
        .min_by(|(i, a), (j, b)| {
            a.total_cmp(b)
                .then(opportunities[*i].distance.total_cmp(&opportunities[*j].distance))
                .then(opportunities[*i].target_vehicle.cmp(&opportunities[*j].target_vehicle))
                .then(Ordering::Equal)
        });
    match best {
        Some((i, s)) => SimilarityDecision { score: Some(s), decision: Decision::Join(i) },
        None => SimilarityDecision { score: None, decision: Decision::StayAlone },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formation::JoinPosition;
    use crate::trip_cost::CostParams;

    fn joiner(desired: f64, c_time: f64) -> JoinerView {
        JoinerView {
            id: 0,
            position: 10_000.0,
            speed: desired,
            desired_speed: desired,
            destination: 50_000.0,
            cost: CostParams::new(c_time, 1.84).unwrap(),
        }
    }

    fn opp(id: u64, desired: f64, distance: f64) -> PlatooningOpportunity {
        PlatooningOpportunity {
            target_vehicle: id,
            target_platoon: None,
            join_position: JoinPosition::Back,
            target_speed: desired,
            target_desired_speed: desired,
            gap_to_target: distance,
            distance,
            member_destinations: vec![60_000.0],
            platoon_size: 1,
        }
    }

    fn trip_cost(j: &JoinerView, opps: &[PlatooningOpportunity]) -> TripCostDecision {
        select_assignment_trip_cost(j, opps, &Default::default(), &Default::default(), &Default::default())
    }

    #[test]
    fn empty_list_stays_alone() {
        assert_eq!(trip_cost(&joiner(30.0, 20.0), &[]).decision, Decision::StayAlone);
        let s = select_assignment_similarity(&joiner(30.0, 20.0), &[], &Default::default(), &Default::default(), &Default::default());
        assert_eq!(s.decision, Decision::StayAlone);
    }

    #[test]
    fn same_speed_target_is_joined() {
        let d = trip_cost(&joiner(30.0, 20.0), &[opp(5, 30.0, 100.0)]);
        assert_eq!(d.decision, Decision::Join(0));
        assert!(d.best.unwrap().1.total_cost < d.individual_cost);
    }

    #[test]
    fn much_slower_target_rejected_by_time_sensitive_driver() {
        let d = trip_cost(&joiner(50.0, 64.0), &[opp(5, 22.0, 100.0)]);
        assert_eq!(d.decision, Decision::StayAlone);
        assert!(d.best.unwrap().1.total_cost >= d.individual_cost);
    }

    #[test]
    fn cheaper_option_wins_and_ties_break_on_id() {
        let d = trip_cost(&joiner(30.0, 20.0), &[opp(5, 30.0, 400.0), opp(6, 30.0, 100.0)]);
        assert_eq!(d.decision, Decision::Join(1));
        let d = trip_cost(&joiner(30.0, 20.0), &[opp(9, 30.0, 100.0), opp(3, 30.0, 100.0)]);
        assert_eq!(d.decision, Decision::Join(1));
    }

    #[test]
    fn similarity_window_and_distance() {
        let j = joiner(30.0, 20.0);
        let cfg = SimilarityConfig::default();
        assert!(similarity_score(&j, &opp(1, 37.5, 100.0), &cfg).is_none());
        assert!(similarity_score(&j, &opp(1, 33.0, 1500.0), &cfg).is_none());
        let opps = [opp(1, 33.0, 400.0), opp(2, 27.0, 100.0)];
        let d = select_assignment_similarity(&j, &opps, &cfg, &Default::default(), &Default::default());
        assert_eq!(d.decision, Decision::Join(1));
    }
}
