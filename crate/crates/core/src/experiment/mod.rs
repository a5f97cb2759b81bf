//! Run matrices of simulations and turn per-vehicle outcomes into gain tables.

mod aggregate;
mod io;

pub use aggregate::{bin_and_aggregate, bin_of, gain_vs_baseline, BinStats, GainRow, GainTable, MetricStats};
pub use io::{
    read_records_csv, write_audit_csv, write_gains_csv, write_manifest, write_records_csv, write_stats_csv,
    TraceWriter,
};

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::Result;
use crate::formation::{AuditRecord, ManeuverOutcome};
use crate::mobility::{Approach, Counters, TripOutcome, World};
use crate::trip_cost::{total_trip_cost, CostParams, TripEstimate};

/// Outcome of one completed trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub vehicle: u64,
    pub approach: Approach,
    pub density: f64,
    pub seed: u64,
    pub c_time: f64,
    pub desired_speed: f64,
    pub depart_time: f64,
    pub arrival_time: f64,
    pub travel_time: f64,
    pub distance_m: f64,
    pub mean_speed: f64,
    pub fuel: f64,
    pub trip_cost: f64,
    pub time_in_platoon: f64,
}

impl ExperimentRecord {
    pub fn from_outcome(o: &TripOutcome, approach: Approach, density: f64, seed: u64) -> Result<Self> {
        let travel_time = o.arrival_time - o.depart_time;
        let estimate = TripEstimate::from_seconds(o.fuel_l, travel_time, o.distance_m)?;
        let params = CostParams::new(o.time_cost_per_hour, o.fuel_price_per_liter)?;
        Ok(Self {
            vehicle: o.id,
            approach,
            density,
            seed,
            c_time: o.time_cost_per_hour,
            desired_speed: o.desired_speed,
            depart_time: o.depart_time,
            arrival_time: o.arrival_time,
            travel_time,
            distance_m: o.distance_m,
            mean_speed: o.distance_m / travel_time,
            fuel: o.fuel_l,
            trip_cost: total_trip_cost(&estimate, &params)?,
            time_in_platoon: o.time_in_platoon_s,
        })
    }
}

/// Options for a single run.
#[derive(Default)]
pub struct RunOptions<'a> {
    pub record_audit: bool,
    /// Receives the state of every vehicle after every step.
    pub trace: Option<&'a mut dyn Write>,
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub approach: Approach,
    pub density: f64,
    pub seed: u64,
    /// Completed trips of vehicles that departed after the warmup.
    pub records: Vec<ExperimentRecord>,
    /// Vehicles that departed after the warmup but had not arrived at the end.
    pub incomplete: usize,
    pub counters: Counters,
    pub audit: Vec<AuditRecord>,
    pub maneuvers: Vec<ManeuverOutcome>,
}

impl RunOutput {
    /// Share of measured departures that completed their trip.
    pub fn completeness(&self) -> f64 {
        let total = self.records.len() + self.incomplete;
        if total == 0 {
            1.0
        } else {
            self.records.len() as f64 / total as f64
        }
    }
}

/// Simulates one cell of the run matrix.
pub fn run_simulation(
    cfg: &Config,
    approach: Approach,
    density: f64,
    seed: u64,
    options: RunOptions<'_>,
) -> Result<RunOutput> {
    let mut world_cfg = cfg.world_config(approach, density, seed)?;
    world_cfg.record_audit = options.record_audit;
    let mut world = World::new(world_cfg)?;
    let mut trace = options.trace.map(TraceWriter::new).transpose()?;
    if let Some(t) = trace.as_mut() {
        t.write(&world)?;
    }
    while world.time() + 1e-9 < cfg.scenario.duration_s {
        world.step()?;
        if let Some(t) = trace.as_mut() {
            t.write(&world)?;
        }
    }
    if let Some(t) = trace.as_mut() {
        t.flush()?;
    }
    let warmup = cfg.scenario.warmup_s;
    let records = world
        .finished()
        .iter()
        .filter(|o| !o.prefilled && o.depart_time >= warmup)
        .map(|o| ExperimentRecord::from_outcome(o, approach, density, seed))
        .collect::<Result<Vec<_>>>()?;
    let incomplete = world.vehicles().iter().filter(|v| v.depart_time >= warmup && !world.is_prefilled(v.id)).count()
        + world.pending_departures();
    Ok(RunOutput {
        approach,
        density,
        seed,
        records,
        incomplete,
        counters: *world.counters(),
        audit: world.audit().to_vec(),
        maneuvers: world.maneuver_outcomes().to_vec(),
    })
}

/// One cell of a run matrix.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub approach: Approach,
    pub density: f64,
    pub seed: u64,
    /// The run, or the error that ended it.
    pub outcome: std::result::Result<RunOutput, String>,
}

/// Runs every (approach, density, seed) combination in parallel. A failing
/// cell is reported in its result and does not stop the others. Results come
/// back in matrix order.
pub fn run_experiment(cfg: &Config, approaches: &[Approach], densities: &[f64], seeds: &[u64]) -> Vec<CellResult> {
    let cells: Vec<(Approach, f64, u64)> = approaches
        .iter()
        .flat_map(|&a| densities.iter().flat_map(move |&d| seeds.iter().map(move |&s| (a, d, s))))
        .collect();
    cells
        .into_par_iter()
        .map(|(approach, density, seed)| CellResult {
            approach,
            density,
            seed,
            outcome: run_simulation(cfg, approach, density, seed, RunOptions::default()).map_err(|e| e.to_string()),
        })
        .collect()
}
