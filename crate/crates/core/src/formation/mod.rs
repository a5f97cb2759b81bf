//! Vehicle-to-platoon assignment and the platoon life cycle.
//!
//! [`estimate`] and [`select`] are pure and work on plain values. [`engine`]
//! applies them to a running [`World`](crate::mobility::World): it gathers
//! opportunities, starts and completes joins and repairs platoons when
//! members leave the road.

pub mod engine;
pub mod estimate;
pub mod select;

pub use engine::{handle_departures, AuditRecord, FormationConfig, JoinManeuver, ManeuverOutcome};
pub use estimate::{
    approach_speed_for, estimate_individual_cost, estimate_join_maneuver, estimate_platoon_option, shared_distance,
    JoinEstimate, JoinPhase, JoinPosition, JoinerView, ManeuverConfig, PlatoonOptionEstimate, PlatooningOpportunity,
};
pub use select::{
    select_assignment_similarity, select_assignment_trip_cost, similarity_score, Decision, SimilarityConfig,
    SimilarityDecision, TripCostDecision,
};
