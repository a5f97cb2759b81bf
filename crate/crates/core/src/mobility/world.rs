//! The simulated freeway: vehicles, platoons, demand and the fixed-step update.
//!
//! One call to [`World::step`] runs, in order: maneuver bookkeeping and
//! platoon formation, lane changes, the longitudinal update with fuel
//! accounting, join completion, arrivals and finally new departures. The
//! world owns its random stream, so two worlds built from the same config
//! evolve identically.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dynamics::{acc_accel, cacc_accel, krauss_speed, DynamicsConfig, Leader};
use super::vehicle::{DriverProfile, DrivingMode, Platoon, PlatoonId, Vehicle, VehicleId};
use crate::error::{Error, Result};
use crate::formation::{handle_departures, AuditRecord, FormationConfig, ManeuverOutcome};
use crate::scenario::{sample_trip, DemandConfig, DepartureAccumulator, Freeway, TripPlan};
use crate::trip_cost::{
    desired_speed_from_time_cost, fuel_rate, slipstream_factor, CostParams, FuelModelCoefficients, PlatoonRole,
    SlipstreamModel, TimeCostDistribution, DEFAULT_FUEL_PRICE_PER_LITER,
};

/// How vehicles drive and whether they form platoons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Approach {
    /// Krauss car following, no platoons.
    Human,
    /// ACC, no platoons.
    Acc,
    /// Platoons formed by desired-speed and position similarity.
    Similarity,
    /// Platoons formed by minimizing estimated trip cost.
    TripCost,
}

impl Approach {
    pub const ALL: [Approach; 4] = [Approach::Human, Approach::Acc, Approach::Similarity, Approach::TripCost];

    pub fn as_str(&self) -> &'static str {
        match self {
            Approach::Human => "human",
            Approach::Acc => "acc",
            Approach::Similarity => "similarity",
            Approach::TripCost => "trip-cost",
        }
    }

    pub fn forms_platoons(&self) -> bool {
        matches!(self, Approach::Similarity | Approach::TripCost)
    }

    /// Mode of vehicles driving on their own.
    pub fn lone_mode(&self) -> DrivingMode {
        match self {
            Approach::Human => DrivingMode::Human,
            _ => DrivingMode::Acc,
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Approach {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Approach::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown approach '{s}' (expected human, acc, similarity or trip-cost)")))
    }
}

/// Everything needed to build and run one world.
#[derive(Debug, Clone)]
pub struct WorldConfig {
    pub freeway: Freeway,
    pub trip_length_m: f64,
    /// Vehicles per km and lane.
    pub density: f64,
    pub approach: Approach,
    pub seed: u64,
    pub time_cost: TimeCostDistribution,
    pub fuel_price_per_liter: f64,
    pub dynamics: DynamicsConfig,
    pub formation: FormationConfig,
    pub fuel_model: FuelModelCoefficients,
    pub slipstream: SlipstreamModel,
    /// Place the desired number of vehicles before the first step.
    pub prefill: bool,
    /// Insert vehicles at the departure rate.
    pub spawning: bool,
    /// Keep every formation decision in memory.
    pub record_audit: bool,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            freeway: Freeway::default(),
            trip_length_m: 50_000.0,
            density: 5.0,
            approach: Approach::Acc,
            seed: 0,
            time_cost: TimeCostDistribution::income_fit(),
            fuel_price_per_liter: DEFAULT_FUEL_PRICE_PER_LITER,
            dynamics: DynamicsConfig::default(),
            formation: FormationConfig::default(),
            fuel_model: FuelModelCoefficients::default(),
            slipstream: SlipstreamModel::default(),
            prefill: true,
            spawning: true,
            record_audit: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    /// Vehicles placed by prefill or inserted at a ramp.
    pub inserted: u64,
    pub arrived: u64,
    /// Insertion attempts postponed because the ramp was blocked.
    pub deferred_insertions: u64,
    pub lane_changes: u64,
    pub joins_started: u64,
    pub joins_completed: u64,
    pub joins_aborted: u64,
}

/// A finished trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripOutcome {
    pub id: VehicleId,
    pub time_cost_per_hour: f64,
    pub fuel_price_per_liter: f64,
    pub desired_speed: f64,
    pub depart_time: f64,
    pub arrival_time: f64,
    pub distance_m: f64,
    pub fuel_l: f64,
    pub time_in_platoon_s: f64,
    /// Placed on the road before the first step rather than inserted at a ramp.
    pub prefilled: bool,
}

/// One line of the optional per-step trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub id: VehicleId,
    pub pos: f64,
    pub lane: usize,
    pub speed: f64,
    pub mode: &'static str,
    pub platoon_id: Option<PlatoonId>,
}

#[derive(Debug, Clone)]
struct PendingDeparture {
    profile: DriverProfile,
    formation_offset: u32,
}

#[derive(Debug, Clone)]
pub struct World {
    pub(crate) cfg: WorldConfig,
    pub(crate) time: f64,
    pub(crate) step_index: u64,
    /// Sorted by id.
    pub(crate) vehicles: Vec<Vehicle>,
    pub(crate) platoons: BTreeMap<PlatoonId, Platoon>,
    next_vehicle_id: VehicleId,
    pub(crate) next_platoon_id: PlatoonId,
    rng: ChaCha8Rng,
    demand: DemandConfig,
    departures: DepartureAccumulator,
    pending: VecDeque<PendingDeparture>,
    prefilled_ids: VehicleId,
    pub(crate) counters: Counters,
    pub(crate) finished: Vec<TripOutcome>,
    pub(crate) audit: Vec<AuditRecord>,
    pub(crate) maneuvers: Vec<ManeuverOutcome>,
}

/// Attempts per vehicle before prefill relaxes the spacing rule.
const PREFILL_ATTEMPTS: usize = 200;

impl World {
    /// Builds the world and, if configured, prefills the road.
    pub fn new(cfg: WorldConfig) -> Result<Self> {
        cfg.freeway.validate()?;
        if !(cfg.dynamics.step_s > 0.0) {
            return Err(Error::Config("time step must be positive".into()));
        }
        if !cfg.slipstream.is_valid() {
            return Err(Error::Config("slipstream reductions must lie in [0, 1)".into()));
        }
        CostParams::new(0.0, cfg.fuel_price_per_liter)?;
        if cfg.freeway.feasible_origins(cfg.trip_length_m).is_empty() {
            return Err(Error::Config(format!(
                "no ramp pair {} m apart on a {} m freeway",
                cfg.trip_length_m, cfg.freeway.length_m
            )));
        }
        let demand = DemandConfig::for_density(&cfg.freeway, cfg.trip_length_m, cfg.density)?;
        let mut world = Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            time: 0.0,
            step_index: 0,
            vehicles: Vec::new(),
            platoons: BTreeMap::new(),
            next_vehicle_id: 0,
            next_platoon_id: 0,
            demand,
            departures: DepartureAccumulator::default(),
            pending: VecDeque::new(),
            prefilled_ids: 0,
            counters: Counters::default(),
            finished: Vec::new(),
            audit: Vec::new(),
            maneuvers: Vec::new(),
        };
        if world.cfg.prefill {
            world.prefill()?;
        }
        world.prefilled_ids = world.next_vehicle_id;
        Ok(world)
    }

    pub fn config(&self) -> &WorldConfig {
        &self.cfg
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn demand(&self) -> &DemandConfig {
        &self.demand
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn vehicle(&self, id: VehicleId) -> Option<&Vehicle> {
        self.index_of(id).map(|i| &self.vehicles[i])
    }

    pub fn platoons(&self) -> impl Iterator<Item = &Platoon> {
        self.platoons.values()
    }

    pub fn platoon(&self, id: PlatoonId) -> Option<&Platoon> {
        self.platoons.get(&id)
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn finished(&self) -> &[TripOutcome] {
        &self.finished
    }

    pub fn audit(&self) -> &[AuditRecord] {
        &self.audit
    }

    pub fn maneuver_outcomes(&self) -> &[ManeuverOutcome] {
        &self.maneuvers
    }

    /// Whether the vehicle was placed by prefill rather than inserted at a ramp.
    pub fn is_prefilled(&self, id: VehicleId) -> bool {
        id < self.prefilled_ids
    }

    /// Departures waiting for a free slot at their ramp.
    pub fn pending_departures(&self) -> usize {
        self.pending.len()
    }

    pub(crate) fn index_of(&self, id: VehicleId) -> Option<usize> {
        self.vehicles.binary_search_by_key(&id, |v| v.id).ok()
    }

    /// Inserts a vehicle directly, bypassing demand. Returns its id.
    pub fn add_vehicle(&mut self, profile: DriverProfile, position: f64, lane: usize, speed: f64) -> Result<VehicleId> {
        if lane >= self.cfg.freeway.lanes || !position.is_finite() || !(0.0..=self.cfg.dynamics.max_speed_mps).contains(&speed) {
            return Err(Error::Config(format!("cannot place vehicle at {position} m, lane {lane}, {speed} m/s")));
        }
        let offset = self.draw_offset();
        Ok(self.push_vehicle(profile, position, lane, speed, offset))
    }

    fn push_vehicle(&mut self, profile: DriverProfile, position: f64, lane: usize, speed: f64, offset: u32) -> VehicleId {
        let id = self.next_vehicle_id;
        self.next_vehicle_id += 1;
        self.vehicles.push(Vehicle {
            id,
            position,
            start_position: position,
            lane,
            speed,
            acceleration: 0.0,
            length: self.cfg.dynamics.vehicle_length_m,
            mode: self.cfg.approach.lone_mode(),
            profile,
            fuel_l: 0.0,
            depart_time: self.time,
            platoon: None,
            maneuver: None,
            reserved_by: None,
            formation_offset: offset,
            time_in_platoon: 0.0,
        });
        self.counters.inserted += 1;
        id
    }

    fn interval_steps(&self) -> u64 {
        ((self.cfg.formation.execution_interval_s / self.cfg.dynamics.step_s).round() as u64).max(1)
    }

    fn draw_offset(&mut self) -> u32 {
        let n = self.interval_steps();
        self.rng.random_range(0..n) as u32
    }

    fn draw_profile(&mut self, trip: TripPlan) -> DriverProfile {
        let c_time = self.cfg.time_cost.sample(&mut self.rng);
        let desired_speed = desired_speed_from_time_cost(c_time).expect("samples are clamped to the valid range");
        let cost = CostParams { time_cost_per_hour: c_time, fuel_price_per_liter: self.cfg.fuel_price_per_liter };
        DriverProfile { cost, desired_speed, trip }
    }

    fn draw_departure(&mut self) -> Result<PendingDeparture> {
        let trip = sample_trip(&self.cfg.freeway, self.cfg.trip_length_m, &mut self.rng)?;
        let profile = self.draw_profile(trip);
        let formation_offset = self.draw_offset();
        Ok(PendingDeparture { profile, formation_offset })
    }

    /// Per-lane lists of vehicle indices, sorted by ascending position.
    pub(crate) fn lanes_ascending(&self) -> Vec<Vec<usize>> {
        let mut lanes = vec![Vec::new(); self.cfg.freeway.lanes];
        for (i, v) in self.vehicles.iter().enumerate() {
            lanes[v.lane].push(i);
        }
        for lane in &mut lanes {
            lane.sort_by(|&a, &b| {
                let (va, vb) = (&self.vehicles[a], &self.vehicles[b]);
                va.position.total_cmp(&vb.position).then(vb.id.cmp(&va.id))
            });
        }
        lanes
    }

    /// Gaps to the nearest vehicles ahead and behind a vehicle of `length`
    /// whose front would be at `position` in a lane sorted by position.
    /// Returns `(ahead, behind)` as `(gap, index)` pairs.
    pub(crate) fn neighbours(
        &self,
        lane: &[usize],
        position: f64,
        length: f64,
        exclude: &[usize],
    ) -> (Option<(f64, usize)>, Option<(f64, usize)>) {
        let split = lane.partition_point(|&i| self.vehicles[i].position <= position);
        let ahead = lane[split..]
            .iter()
            .find(|i| !exclude.contains(i))
            .map(|&i| (self.vehicles[i].rear() - position, i));
        let behind = lane[..split]
            .iter()
            .rev()
            .find(|i| !exclude.contains(i))
            .map(|&i| (position - length - self.vehicles[i].position, i));
        (ahead, behind)
    }

    /// Whether a vehicle at `position` with `speed` keeps the insertion
    /// headway to both neighbours in `lane`.
    fn insertion_clear(&self, lane: &[usize], position: f64, speed: f64, headway_s: f64) -> bool {
        let d = &self.cfg.dynamics;
        let (ahead, behind) = self.neighbours(lane, position, d.vehicle_length_m, &[]);
        let closing = |follower: f64, leader: f64| (follower - leader).max(0.0).powi(2) / (2.0 * d.krauss_decel_mps2);
        let ahead_ok = ahead.is_none_or(|(gap, i)| {
            gap >= d.min_gap_m.max(headway_s * speed) + closing(speed, self.vehicles[i].speed)
        });
        let behind_ok = behind.is_none_or(|(gap, i)| {
            let vf = self.vehicles[i].speed;
            gap >= d.min_gap_m.max(headway_s * vf) + closing(vf, speed)
        });
        ahead_ok && behind_ok
    }

    fn insert_sorted(&self, lane: &mut Vec<usize>, index: usize) {
        let pos = self.vehicles[index].position;
        let at = lane.partition_point(|&i| self.vehicles[i].position <= pos);
        lane.insert(at, index);
    }

    /// Places the desired number of vehicles along their trips, on the
    /// right-most lane that keeps the ACC headway at desired speed. Vehicles
    /// that find no such spot after repeated draws are placed with the
    /// minimum gap and a speed reduced to fit.
    fn prefill(&mut self) -> Result<()> {
        let count = self.demand.desired_vehicle_count;
        let h = self.cfg.dynamics.acc_headway_s;
        let min_gap = self.cfg.dynamics.min_gap_m;
        let length = self.cfg.dynamics.vehicle_length_m;
        let mut lanes: Vec<Vec<usize>> = vec![Vec::new(); self.cfg.freeway.lanes];
        let mut relaxed = false;
        for _ in 0..count {
            let departure = self.draw_departure()?;
            let trip = departure.profile.trip;
            let speed = departure.profile.desired_speed;
            let mut spot = None;
            for attempt in 0..2 * PREFILL_ATTEMPTS {
                let strict = attempt < PREFILL_ATTEMPTS;
                let u: f64 = self.rng.random();
                let position = trip.origin_m + u * (trip.length_m() - 1.0);
                let found = (0..lanes.len()).find(|&l| {
                    if strict {
                        self.insertion_clear(&lanes[l], position, speed, h)
                    } else {
                        let (ahead, behind) = self.neighbours(&lanes[l], position, length, &[]);
                        ahead.is_none_or(|(g, _)| g >= 2.0 * min_gap) && behind.is_none_or(|(g, _)| g >= 2.0 * min_gap)
                    }
                });
                if let Some(l) = found {
                    relaxed |= !strict;
                    spot = Some((position, l));
                    break;
                }
            }
            let (position, lane) = spot.ok_or_else(|| {
                Error::Config(format!("cannot prefill {count} vehicles without overlap at density {}", self.cfg.density))
            })?;
            self.push_vehicle(departure.profile, position, lane, speed, departure.formation_offset);
            let index = self.vehicles.len() - 1;
            self.insert_sorted(&mut lanes[lane], index);
        }
        if relaxed {
            // Slow down whoever ended up too close to the vehicle ahead.
            for lane in &lanes {
                for k in 0..lane.len().saturating_sub(1) {
                    let (i, p) = (lane[k], lane[k + 1]);
                    let gap = self.vehicles[p].rear() - self.vehicles[i].position;
                    let v = &mut self.vehicles[i];
                    v.speed = v.speed.min(((gap - min_gap) / h).max(0.0));
                }
            }
        }
        Ok(())
    }

    /// Queues departures at the configured rate and inserts as many queued
    /// vehicles as their ramps allow.
    pub fn spawn_step(&mut self) -> Result<()> {
        let dt = self.cfg.dynamics.step_s;
        let n = self.departures.advance(self.demand.departure_rate_per_h, dt);
        for _ in 0..n {
            let d = self.draw_departure()?;
            self.pending.push_back(d);
        }
        if self.pending.is_empty() {
            return Ok(());
        }
        let h = self.cfg.dynamics.acc_headway_s;
        let mut lanes = self.lanes_ascending();
        let mut waiting = VecDeque::new();
        while let Some(d) = self.pending.pop_front() {
            let position = d.profile.trip.origin_m;
            let speed = d.profile.desired_speed;
            match (0..lanes.len()).find(|&l| self.insertion_clear(&lanes[l], position, speed, h)) {
                Some(lane) => {
                    self.push_vehicle(d.profile, position, lane, speed, d.formation_offset);
                    let index = self.vehicles.len() - 1;
                    self.insert_sorted(&mut lanes[lane], index);
                }
                None => {
                    self.counters.deferred_insertions += 1;
                    waiting.push_back(d);
                }
            }
        }
        self.pending = waiting;
        Ok(())
    }

    /// Advances the world by one time step.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.cfg.dynamics.step_s;
        if self.cfg.approach.forms_platoons() {
            self.check_maneuvers();
            self.run_formation();
        }
        self.apply_lane_policy();
        let step_fuel = self.update_longitudinal()?;
        if self.cfg.approach.forms_platoons() {
            self.complete_joins();
        }
        self.remove_arrivals(&step_fuel);
        self.step_index += 1;
        self.time = self.step_index as f64 * dt;
        if self.cfg.spawning {
            self.spawn_step()?;
        }
        self.check_consistency()
    }

    /// Steps until the clock reaches `t_end`.
    pub fn run_until(&mut self, t_end: f64) -> Result<()> {
        while self.time + 1e-9 < t_end {
            self.step()?;
        }
        Ok(())
    }

    pub(crate) fn role_of(&self, v: &Vehicle) -> PlatoonRole {
        match v.platoon.and_then(|p| self.platoons.get(&p)) {
            None => PlatoonRole::Alone,
            Some(p) if p.leader() == v.id => PlatoonRole::Leader,
            Some(p) if p.last() == v.id => PlatoonRole::Last,
            Some(_) => PlatoonRole::Mid,
        }
    }

    /// Desired speed the vehicle's controller tracks: the platoon's for
    /// platoon members, the driver's own otherwise.
    pub(crate) fn tracked_speed(&self, v: &Vehicle) -> f64 {
        v.platoon
            .and_then(|p| self.platoons.get(&p))
            .map_or(v.profile.desired_speed, |p| p.desired_speed)
    }

    /// Speed and position update, lane by lane from the front. Returns the
    /// fuel each vehicle burned during the step.
    fn update_longitudinal(&mut self) -> Result<Vec<f64>> {
        let d = self.cfg.dynamics.clone();
        let dt = d.step_s;
        let n = self.vehicles.len();
        let old: Vec<(f64, f64, f64)> = self.vehicles.iter().map(|v| (v.position, v.speed, v.acceleration)).collect();
        let mut new_pos = vec![0.0; n];
        let mut new_accel = vec![0.0; n];
        let mut new_speed = vec![0.0_f64; n];
        let lanes = self.lanes_ascending();
        for lane in &lanes {
            for k in (0..lane.len()).rev() {
                let i = lane[k];
                let pred = lane.get(k + 1).copied();
                let v = &self.vehicles[i];
                let (x, speed, _) = old[i];
                let old_leader = pred.map(|p| Leader {
                    gap: old[p].0 - self.vehicles[p].length - x,
                    speed: old[p].1,
                    accel: old[p].2,
                });
                let cacc_pred = pred.filter(|&p| {
                    v.mode == DrivingMode::CaccFollower && v.platoon.is_some() && self.vehicles[p].platoon == v.platoon
                });
                let mut target = if let Some(p) = cacc_pred {
                    let leader = Leader { gap: old_leader.unwrap().gap, speed: old[p].1, accel: new_accel[p] };
                    speed + cacc_accel(speed, leader, &d) * dt
                } else if v.maneuver.is_some() {
                    self.joiner_speed_command(i, pred, old_leader, &old)
                } else if v.mode == DrivingMode::Human {
                    let dawdle = if d.krauss_sigma > 0.0 { self.rng.random::<f64>() } else { 0.0 };
                    krauss_speed(speed, v.profile.desired_speed, old_leader, &d, dawdle)
                } else if let Some(a) = self.rear_party_accel(i, pred, &old) {
                    speed + a * dt
                } else {
                    speed + acc_accel(speed, self.tracked_speed(v), old_leader, &d) * dt
                };
                target = target.min(speed + d.max_accel_mps2 * dt).min(d.max_speed_mps);
                if let (Some(l), None) = (old_leader, cacc_pred) {
                    // Never close in faster than a comfortable stop behind the leader allows.
                    let room = (l.gap - d.min_gap_m).max(0.0);
                    target = target.min(l.speed + 2.0 * d.krauss_decel_mps2 * room / (speed + l.speed).max(1e-6));
                }
                if let Some(p) = pred {
                    // Keep the gap positive this step and stay able to stop behind
                    // the leader should it keep braking at full force.
                    let room = new_pos[p] - self.vehicles[p].length - x - d.min_gap_m;
                    let b = d.max_decel_mps2;
                    let stop = ((b * dt).powi(2) + new_speed[p].powi(2) + 2.0 * b * room).max(0.0).sqrt() - b * dt;
                    target = target.min(room / dt).min(stop);
                }
                let v_new = target.max(speed - d.max_decel_mps2 * dt).max(0.0);
                new_speed[i] = v_new;
                new_accel[i] = (v_new - speed) / dt;
                new_pos[i] = x + v_new * dt;
            }
        }
        let mut step_fuel = vec![0.0; n];
        for i in 0..n {
            let factor = slipstream_factor(self.role_of(&self.vehicles[i]), &self.cfg.slipstream);
            step_fuel[i] = fuel_rate(new_speed[i], new_accel[i], &self.cfg.fuel_model) * factor * dt;
            let v = &mut self.vehicles[i];
            v.position = new_pos[i];
            v.speed = new_speed[i];
            v.acceleration = new_accel[i];
            v.fuel_l += step_fuel[i];
            if v.platoon.is_some() {
                v.time_in_platoon += dt;
            }
        }
        Ok(step_fuel)
    }

    fn remove_arrivals(&mut self, step_fuel: &[f64]) {
        let dt = self.cfg.dynamics.step_s;
        let arriving: Vec<VehicleId> = self
            .vehicles
            .iter()
            .filter(|v| v.position >= v.profile.trip.destination_m)
            .map(|v| v.id)
            .collect();
        if arriving.is_empty() {
            return;
        }
        handle_departures(self, &arriving);
        for (i, v) in self.vehicles.iter().enumerate() {
            if v.position < v.profile.trip.destination_m {
                continue;
            }
            // Interpolate the crossing of the destination within the step.
            let travelled = v.speed * dt;
            let overshoot = v.position - v.profile.trip.destination_m;
            let frac = if travelled > 0.0 { (1.0 - overshoot / travelled).clamp(0.0, 1.0) } else { 1.0 };
            let arrival_time = self.time + frac * dt;
            let fuel_l = v.fuel_l - (1.0 - frac) * step_fuel[i];
            self.finished.push(TripOutcome {
                id: v.id,
                time_cost_per_hour: v.profile.cost.time_cost_per_hour,
                fuel_price_per_liter: v.profile.cost.fuel_price_per_liter,
                desired_speed: v.profile.desired_speed,
                depart_time: v.depart_time,
                arrival_time,
                distance_m: v.profile.trip.destination_m - v.start_position,
                fuel_l,
                time_in_platoon_s: v.time_in_platoon,
                prefilled: v.id < self.prefilled_ids,
            });
        }
        self.counters.arrived += arriving.len() as u64;
        self.vehicles.retain(|v| v.position < v.profile.trip.destination_m);
    }

    /// Bug trap: overlapping vehicles or broken platoons end the run.
    fn check_consistency(&self) -> Result<()> {
        let fail = |message: String| Err(Error::Simulation { time: self.time, message });
        for lane in self.lanes_ascending() {
            for w in lane.windows(2) {
                let (f, p) = (&self.vehicles[w[0]], &self.vehicles[w[1]]);
                let gap = p.rear() - f.position;
                if gap <= 0.0 {
                    return fail(format!("vehicles {} and {} overlap in lane {} (gap {gap:.3} m)", f.id, p.id, f.lane));
                }
            }
        }
        for p in self.platoons.values() {
            if p.members.len() < 2 {
                return fail(format!("platoon {} has {} members", p.id, p.members.len()));
            }
            let mut prev: Option<&Vehicle> = None;
            for &id in &p.members {
                let Some(v) = self.vehicle(id) else {
                    return fail(format!("platoon {} lists missing vehicle {id}", p.id));
                };
                if v.platoon != Some(p.id) {
                    return fail(format!("vehicle {id} is listed in platoon {} but not linked to it", p.id));
                }
                if let Some(q) = prev {
                    if q.lane != v.lane || q.position <= v.position {
                        return fail(format!("platoon {} is out of order at vehicle {id}", p.id));
                    }
                }
                prev = Some(v);
            }
        }
        Ok(())
    }

    /// Snapshot of the current state for the trace output.
    pub fn trace_rows(&self) -> impl Iterator<Item = TraceRow> + '_ {
        self.vehicles.iter().map(move |v| TraceRow {
            t: self.time,
            id: v.id,
            pos: v.position,
            lane: v.lane,
            speed: v.speed,
            mode: v.mode.as_str(),
            platoon_id: v.platoon,
        })
    }
}
