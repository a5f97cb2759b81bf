//! Platoon formation inside a running world: opportunity discovery,
//! decisions, join execution and platoon repair on departure.

use serde::{Deserialize, Serialize};

use super::estimate::{
    approach_speed_for, estimate_join_maneuver, estimate_platoon_option, JoinEstimate, JoinPhase, JoinPosition, JoinerView,
    ManeuverConfig, PlatooningOpportunity,
};
use super::select::{select_assignment_similarity, select_assignment_trip_cost, Decision, SimilarityConfig};
use crate::mobility::dynamics::{acc_accel, approach_speed, Leader};
use crate::mobility::{Approach, DrivingMode, Platoon, PlatoonId, VehicleId, World};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FormationConfig {
    pub execution_interval_s: f64,
    pub communication_range_m: f64,
    pub maneuver: ManeuverConfig,
    pub similarity: SimilarityConfig,
    /// A join is abandoned after `factor × estimated time + slack`.
    pub timeout_factor: f64,
    pub timeout_slack_s: f64,
    pub attach_gap_tolerance_m: f64,
    pub attach_speed_tolerance_mps: f64,
    /// Multiplies both prices in every decision. Desired speeds and realized
    /// costs are unaffected.
    pub decision_cost_scale: f64,
}

impl Default for FormationConfig {
    fn default() -> Self {
        Self {
            execution_interval_s: 60.0,
            communication_range_m: 500.0,
            maneuver: ManeuverConfig::default(),
            similarity: SimilarityConfig::default(),
            timeout_factor: 2.0,
            timeout_slack_s: 60.0,
            attach_gap_tolerance_m: 0.5,
            attach_speed_tolerance_mps: 1.0,
            decision_cost_scale: 1.0,
        }
    }
}

/// A join in progress, carried by the joining vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinManeuver {
    /// Vehicle at the end being joined.
    pub target: VehicleId,
    pub target_platoon: Option<PlatoonId>,
    pub position: JoinPosition,
    pub approach_speed: f64,
    /// Target speed when the join started.
    pub target_speed_at_start: f64,
    pub estimate: JoinEstimate,
    pub started_at: f64,
    pub deadline: f64,
    pub fuel_at_start: f64,
    pub position_at_start: f64,
}

/// One formation decision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRecord {
    pub t: f64,
    pub vehicle: VehicleId,
    /// Estimated cost of finishing the trip alone.
    pub individual_cost: f64,
    /// Cheapest estimated platoon option, if any could be computed. For the
    /// similarity rule this is the estimate of the chosen candidate.
    pub best_platoon_cost: Option<f64>,
    pub target: Option<VehicleId>,
    /// `stay`, `join-front` or `join-back`.
    pub decision: &'static str,
    #[serde(skip)]
    pub approach: Option<Approach>,
    #[serde(skip)]
    pub opportunities: usize,
    /// Relative desired-speed deviation of the chosen target.
    #[serde(skip)]
    pub speed_deviation: Option<f64>,
    /// Distance to the chosen target.
    #[serde(skip)]
    pub distance: Option<f64>,
}

/// Estimated against realized cost of a join that ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ManeuverOutcome {
    pub vehicle: VehicleId,
    pub target: VehicleId,
    pub position: JoinPosition,
    pub started_at: f64,
    pub ended_at: f64,
    pub completed: bool,
    pub estimated: JoinPhase,
    pub realized: JoinPhase,
}

impl World {
    fn joiner_view(&self, i: usize) -> JoinerView {
        let v = &self.vehicles[i];
        JoinerView {
            id: v.id,
            position: v.position,
            speed: v.speed,
            desired_speed: v.profile.desired_speed,
            destination: v.profile.trip.destination_m,
            cost: v.profile.cost.scaled(self.cfg.formation.decision_cost_scale),
        }
    }

    /// Lone vehicles and platoon ends within communication range that are
    /// free to be joined, with the join position implied by geometry.
    /// `by_position` lists all vehicle indices in ascending position.
    fn gather_opportunities(&self, i: usize, by_position: &[usize], lanes: &[Vec<usize>]) -> Vec<PlatooningOpportunity> {
        let joiner = &self.vehicles[i];
        let x = joiner.position;
        let range = self.cfg.formation.communication_range_m;
        let gap = self.cfg.dynamics.cacc_gap_m;
        let lo = by_position.partition_point(|&k| self.vehicles[k].position < x - range);
        let hi = by_position.partition_point(|&k| self.vehicles[k].position <= x + range);
        let mut out = Vec::new();
        for &k in &by_position[lo..hi] {
            if k == i {
                continue;
            }
            let c = &self.vehicles[k];
            let back_slot = c.rear() - gap;
            let front_slot = c.position + gap + joiner.length;
            let (position, gap_to_target, platoon) = match c.platoon.and_then(|p| self.platoons.get(&p)) {
                None => {
                    if c.maneuver.is_some() || c.reserved_by.is_some() {
                        continue;
                    }
                    if x <= back_slot {
                        (JoinPosition::Back, back_slot - x, None)
                    } else if x >= front_slot {
                        (JoinPosition::Front, x - front_slot, None)
                    } else {
                        continue;
                    }
                }
                Some(p) => {
                    if p.reserved_by.is_some() {
                        continue;
                    }
                    if p.last() == c.id && x <= back_slot {
                        (JoinPosition::Back, back_slot - x, Some(p))
                    } else if p.leader() == c.id && x >= front_slot {
                        (JoinPosition::Front, x - front_slot, Some(p))
                    } else {
                        continue;
                    }
                }
            };
            if !self.slot_free(k, position, joiner.length, lanes) {
                continue;
            }
            let (destinations, desired, size) = match platoon {
                Some(p) => (
                    p.members.iter().map(|&m| self.vehicle(m).unwrap().profile.trip.destination_m).collect(),
                    p.desired_speed,
                    p.members.len(),
                ),
                None => (vec![c.profile.trip.destination_m], c.profile.desired_speed, 1),
            };
            out.push(PlatooningOpportunity {
                target_vehicle: c.id,
                target_platoon: platoon.map(|p| p.id),
                join_position: position,
                target_speed: c.speed,
                target_desired_speed: desired,
                gap_to_target,
                distance: (c.position - x).abs(),
                member_destinations: destinations,
                platoon_size: size,
            });
        }
        out
    }

    /// Whether there is room for a joiner of `length` in front of or behind
    /// vehicle `k`, which is the first or last of its formation: the platoon
    /// gap, the vehicle and half the ACC headway to whoever is already there.
    fn slot_free(&self, k: usize, position: JoinPosition, length: f64, lanes: &[Vec<usize>]) -> bool {
        let d = &self.cfg.dynamics;
        let c = &self.vehicles[k];
        let lane = &lanes[c.lane];
        let at = lane.iter().position(|&x| x == k).expect("vehicle is in its lane");
        let (space, speed) = match position {
            JoinPosition::Front => match lane.get(at + 1) {
                Some(&p) => (self.vehicles[p].rear() - c.position, c.speed),
                None => return true,
            },
            JoinPosition::Back => match at.checked_sub(1).map(|b| lane[b]) {
                Some(f) => (c.rear() - self.vehicles[f].position, self.vehicles[f].speed),
                None => return true,
            },
        };
        space >= d.cacc_gap_m + length + (0.5 * d.acc_headway_s * speed).max(d.min_gap_m)
    }

    /// Runs the assignment rule for every vehicle whose execution slot is due.
    pub(crate) fn run_formation(&mut self) {
        let interval = ((self.cfg.formation.execution_interval_s / self.cfg.dynamics.step_s).round() as u64).max(1);
        let mut by_position: Vec<usize> = (0..self.vehicles.len()).collect();
        by_position.sort_by(|&a, &b| {
            let (va, vb) = (&self.vehicles[a], &self.vehicles[b]);
            va.position.total_cmp(&vb.position).then(va.id.cmp(&vb.id))
        });
        let lanes = self.lanes_ascending();
        for i in 0..self.vehicles.len() {
            let v = &self.vehicles[i];
            if !(self.step_index + v.formation_offset as u64).is_multiple_of(interval) || !v.is_searching() {
                continue;
            }
            if v.remaining_distance() <= 0.0 {
                continue;
            }
            let opportunities = self.gather_opportunities(i, &by_position, &lanes);
            let joiner = self.joiner_view(i);
            let f = &self.cfg.formation;
            let coeffs = &self.cfg.fuel_model;
            let trip_cost = select_assignment_trip_cost(&joiner, &opportunities, &f.maneuver, coeffs, &self.cfg.slipstream);
            let (decision, best_cost) = match self.cfg.approach {
                Approach::TripCost => (trip_cost.decision, trip_cost.best.map(|(_, e)| e.total_cost)),
                _ => {
                    let d = select_assignment_similarity(&joiner, &opportunities, &f.similarity, &f.maneuver, coeffs);
                    let cost = match d.decision {
                        Decision::Join(k) => {
                            estimate_platoon_option(&joiner, &opportunities[k], &f.maneuver, coeffs, &self.cfg.slipstream)
                                .map(|e| e.total_cost)
                        }
                        Decision::StayAlone => None,
                    };
                    (d.decision, cost)
                }
            };
            let chosen = match decision {
                Decision::Join(k) => Some(&opportunities[k]),
                Decision::StayAlone => None,
            };
            if self.cfg.record_audit {
                self.audit.push(AuditRecord {
                    t: self.time,
                    vehicle: joiner.id,
                    individual_cost: trip_cost.individual_cost,
                    best_platoon_cost: best_cost,
                    target: chosen.map(|o| o.target_vehicle),
                    decision: match chosen.map(|o| o.join_position) {
                        None => "stay",
                        Some(JoinPosition::Front) => "join-front",
                        Some(JoinPosition::Back) => "join-back",
                    },
                    approach: Some(self.cfg.approach),
                    opportunities: opportunities.len(),
                    speed_deviation: chosen
                        .map(|o| (o.target_desired_speed - joiner.desired_speed).abs() / joiner.desired_speed),
                    distance: chosen.map(|o| o.distance),
                });
            }
            if let Some(o) = chosen {
                let o = o.clone();
                self.start_join(i, &o);
            }
        }
    }

    fn start_join(&mut self, i: usize, o: &PlatooningOpportunity) {
        let f = &self.cfg.formation;
        let Some(estimate) = estimate_join_maneuver(self.vehicles[i].speed, o, &f.maneuver, &self.cfg.fuel_model) else {
            return;
        };
        let deadline = self.time + f.timeout_factor * estimate.total.time_s + f.timeout_slack_s;
        let v = &mut self.vehicles[i];
        let joiner = v.id;
        v.maneuver = Some(JoinManeuver {
            target: o.target_vehicle,
            target_platoon: o.target_platoon,
            position: o.join_position,
            approach_speed: estimate.approach_speed,
            target_speed_at_start: o.target_speed,
            estimate,
            started_at: self.time,
            deadline,
            fuel_at_start: v.fuel_l,
            position_at_start: v.position,
        });
        match o.target_platoon {
            Some(p) => self.platoons.get_mut(&p).unwrap().reserved_by = Some(joiner),
            None => {
                let t = self.index_of(o.target_vehicle).unwrap();
                self.vehicles[t].reserved_by = Some(joiner);
            }
        }
        self.counters.joins_started += 1;
    }

    /// Whether the target of joiner `i` is still where the join expects it.
    fn maneuver_valid(&self, i: usize) -> bool {
        let v = &self.vehicles[i];
        let Some(m) = &v.maneuver else { return false };
        let Some(t) = self.vehicle(m.target) else { return false };
        if self.time > m.deadline {
            return false;
        }
        match m.target_platoon {
            None => t.platoon.is_none() && t.reserved_by == Some(v.id),
            Some(pid) => self.platoons.get(&pid).is_some_and(|p| {
                p.reserved_by == Some(v.id)
                    && match m.position {
                        JoinPosition::Back => p.last() == t.id,
                        JoinPosition::Front => p.leader() == t.id,
                    }
            }),
        }
    }

    /// Aborts joins whose target vanished, changed or that ran out of time.
    pub(crate) fn check_maneuvers(&mut self) {
        for i in 0..self.vehicles.len() {
            if self.vehicles[i].maneuver.is_some() && !self.maneuver_valid(i) {
                self.abort_join(i);
            }
        }
    }

    /// Drops the maneuver of joiner `i`, releases its reservation and logs it.
    pub(crate) fn abort_join(&mut self, i: usize) {
        let Some(m) = self.vehicles[i].maneuver.take() else { return };
        let joiner = self.vehicles[i].id;
        self.release(joiner, &m);
        self.vehicles[i].mode = DrivingMode::Acc;
        self.record_outcome(i, &m, false);
        self.counters.joins_aborted += 1;
    }

    fn release(&mut self, joiner: VehicleId, m: &JoinManeuver) {
        if let Some(p) = m.target_platoon.and_then(|p| self.platoons.get_mut(&p)) {
            if p.reserved_by == Some(joiner) {
                p.reserved_by = None;
            }
        }
        if let Some(t) = self.index_of(m.target) {
            if self.vehicles[t].reserved_by == Some(joiner) {
                self.vehicles[t].reserved_by = None;
            }
        }
    }

    fn record_outcome(&mut self, i: usize, m: &JoinManeuver, completed: bool) {
        let v = &self.vehicles[i];
        let ended_at = self.time + self.cfg.dynamics.step_s;
        self.maneuvers.push(ManeuverOutcome {
            vehicle: v.id,
            target: m.target,
            position: m.position,
            started_at: m.started_at,
            ended_at,
            completed,
            estimated: m.estimate.total,
            realized: JoinPhase {
                time_s: ended_at - m.started_at,
                distance_m: v.position - m.position_at_start,
                fuel_l: v.fuel_l - m.fuel_at_start,
            },
        });
    }

    /// Speed command of a joiner: close in on the slot at the approach speed,
    /// settle onto the target's speed, and never tailgate anyone else.
    pub(crate) fn joiner_speed_command(
        &self,
        i: usize,
        pred: Option<usize>,
        old_leader: Option<Leader>,
        old: &[(f64, f64, f64)],
    ) -> f64 {
        let d = &self.cfg.dynamics;
        let mc = &self.cfg.formation.maneuver;
        let dt = d.step_s;
        let v = &self.vehicles[i];
        let m = v.maneuver.as_ref().expect("caller checked");
        let (x, speed, _) = old[i];
        let Some(t) = self.index_of(m.target) else {
            return speed + acc_accel(speed, v.profile.desired_speed, old_leader, d) * dt;
        };
        let (tx, tv, _) = old[t];
        let target_len = self.vehicles[t].length;
        // A front joiner holds back the target itself, so it plans against the
        // speed the target had when the join started.
        let (slot, settle, reference) = match m.position {
            JoinPosition::Back => (tx - target_len - d.cacc_gap_m, mc.approach_decel_mps2, tv),
            JoinPosition::Front => (tx + d.cacc_gap_m + v.length, mc.approach_accel_mps2, tv.max(m.target_speed_at_start)),
        };
        let v_c = approach_speed_for(reference, m.position, mc).unwrap_or(m.approach_speed);
        let command = approach_speed(reference, v_c, slot - x, settle, dt);
        let mut a = ((command - speed) / dt).clamp(-mc.approach_decel_mps2, mc.approach_accel_mps2);
        if pred == Some(t) {
            // Braking-distance bound so a hard-braking target never gets hit.
            let room = (tx - target_len - x - d.cacc_gap_m).max(0.0);
            let v_safe = tv + room * 2.0 * d.krauss_decel_mps2 / (speed + tv).max(1e-6);
            a = a.min((v_safe - speed) / dt);
        } else if pred.is_some() {
            a = a.min(acc_accel(speed, d.max_speed_mps, old_leader, d));
        }
        speed + d.clamp_accel(a) * dt
    }

    /// Control of the rear party of a front join once the joiner is directly
    /// ahead: keep tracking the desired speed and let the joiner drop back,
    /// braking only when the gap would shrink below the platoon spacing.
    pub(crate) fn rear_party_accel(&self, i: usize, pred: Option<usize>, old: &[(f64, f64, f64)]) -> Option<f64> {
        let v = &self.vehicles[i];
        let reserved = match v.platoon.and_then(|p| self.platoons.get(&p)) {
            Some(p) if p.leader() == v.id => p.reserved_by,
            Some(_) => None,
            None => v.reserved_by,
        }?;
        let p = pred?;
        let joiner = &self.vehicles[p];
        if joiner.id != reserved || joiner.maneuver.as_ref()?.position != JoinPosition::Front {
            return None;
        }
        let d = &self.cfg.dynamics;
        let dt = d.step_s;
        let (x, speed, _) = old[i];
        let excess = old[p].0 - joiner.length - x - d.cacc_gap_m;
        let closing = if excess > 0.0 {
            (4.0 * self.cfg.formation.maneuver.approach_accel_mps2 * excess).sqrt().min(excess / dt)
        } else {
            excess / dt
        };
        let free = d.acc_speed_gain_per_s * (self.tracked_speed(v) - speed);
        Some(d.clamp_accel(free.min((old[p].1 + closing - speed) / dt)))
    }

    /// Turns joiners that reached their slot into platoon members.
    pub(crate) fn complete_joins(&mut self) {
        let f = &self.cfg.formation;
        let (tol_gap, tol_speed) = (f.attach_gap_tolerance_m, f.attach_speed_tolerance_mps);
        let gap = self.cfg.dynamics.cacc_gap_m;
        for i in 0..self.vehicles.len() {
            let Some(m) = self.vehicles[i].maneuver.clone() else { continue };
            let Some(t) = self.index_of(m.target) else { continue };
            let (j, tv) = (&self.vehicles[i], &self.vehicles[t]);
            if j.lane != tv.lane || (j.speed - tv.speed).abs() > tol_speed {
                continue;
            }
            let actual = match m.position {
                JoinPosition::Back => tv.rear() - j.position,
                JoinPosition::Front => j.rear() - tv.position,
            };
            if (actual - gap).abs() > tol_gap {
                continue;
            }
            self.attach(i, t, &m);
        }
    }

    fn attach(&mut self, i: usize, t: usize, m: &JoinManeuver) {
        let joiner = self.vehicles[i].id;
        let target = self.vehicles[t].id;
        self.vehicles[i].maneuver = None;
        self.release(joiner, m);
        let pid = match self.vehicles[t].platoon {
            Some(pid) => {
                let p = self.platoons.get_mut(&pid).unwrap();
                match m.position {
                    JoinPosition::Back => p.members.push(joiner),
                    JoinPosition::Front => p.members.insert(0, joiner),
                }
                pid
            }
            None => {
                let pid = self.next_platoon_id;
                self.next_platoon_id += 1;
                let members = match m.position {
                    JoinPosition::Back => vec![target, joiner],
                    JoinPosition::Front => vec![joiner, target],
                };
                let desired_speed = self.vehicles[t].profile.desired_speed;
                self.platoons.insert(pid, Platoon { id: pid, members, desired_speed, reserved_by: None });
                pid
            }
        };
        self.vehicles[i].platoon = Some(pid);
        self.vehicles[t].platoon = Some(pid);
        let members = self.platoons[&pid].members.clone();
        for (k, id) in members.into_iter().enumerate() {
            let idx = self.index_of(id).unwrap();
            self.vehicles[idx].mode = if k == 0 { DrivingMode::Acc } else { DrivingMode::CaccFollower };
        }
        self.record_outcome(i, m, true);
        self.counters.joins_completed += 1;
    }
}

/// Repairs platoons and joins affected by the vehicles in `departing`
/// leaving the road. The vehicles themselves are removed by the caller.
///
/// A departing leader hands over to the next member, which keeps the
/// platoon's desired speed. A platoon reduced to one vehicle dissolves and
/// the survivor drives on alone. Joins targeting a departing vehicle, or the
/// platoon it left, are aborted; joins by a departing vehicle are dropped.
pub fn handle_departures(world: &mut World, departing: &[VehicleId]) {
    for &id in departing {
        let Some(i) = world.index_of(id) else { continue };
        if let Some(m) = world.vehicles[i].maneuver.take() {
            world.release(id, &m);
        }
        if let Some(j) = world.vehicles[i].reserved_by.take() {
            if let Some(ji) = world.index_of(j) {
                world.abort_join(ji);
            }
        }
        let Some(pid) = world.vehicles[i].platoon.take() else { continue };
        world.vehicles[i].mode = world.cfg.approach.lone_mode();
        let reserved = world.platoons.get_mut(&pid).and_then(|p| {
            p.members.retain(|&m| m != id);
            p.reserved_by.take()
        });
        if let Some(j) = reserved.and_then(|j| world.index_of(j)) {
            world.abort_join(j);
        }
        let members = world.platoons[&pid].members.clone();
        if members.len() < 2 {
            world.platoons.remove(&pid);
            for m in members {
                let k = world.index_of(m).unwrap();
                world.vehicles[k].platoon = None;
                world.vehicles[k].mode = world.cfg.approach.lone_mode();
            }
        } else {
            let k = world.index_of(members[0]).unwrap();
            world.vehicles[k].mode = DrivingMode::Acc;
        }
    }
}
