//! CSV and manifest output.
//!
//! * `records.csv`: one row per completed trip, columns as in [`ExperimentRecord`].
//! * `stats.csv`: `approach,density,bin_lo,bin_hi,count` followed by mean and
//!   std of speed, travel time, fuel and trip cost.
//! * `gains.csv`: `density,bin_lo,bin_hi,approach,count,mean_trip_cost,baseline_trip_cost,gain`.
//! * `audit.csv`: `t,vehicle,individual_cost,best_platoon_cost,target,decision`.
//! * `trace.csv`: `t,id,pos,lane,speed,mode,platoon_id`.

use std::io::{Read, Write};

use serde::Serialize;

use super::{BinStats, CellResult, ExperimentRecord, GainTable};
use crate::config::Config;
use crate::error::Result;
use crate::formation::AuditRecord;
use crate::mobility::{Approach, World};

fn write_rows<W: Write, T: Serialize>(writer: W, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_csv<W: Write>(records: &[ExperimentRecord], writer: W) -> Result<()> {
    if records.is_empty() {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "vehicle", "approach", "density", "seed", "c_time", "desired_speed", "depart_time", "arrival_time",
            "travel_time", "distance_m", "mean_speed", "fuel", "trip_cost", "time_in_platoon",
        ])?;
        w.flush()?;
        return Ok(());
    }
    write_rows(writer, records)
}

pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<ExperimentRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    Ok(r.deserialize().collect::<std::result::Result<Vec<_>, _>>()?)
}

#[derive(Serialize)]
struct StatsRow {
    approach: Approach,
    density: f64,
    bin_lo: f64,
    bin_hi: f64,
    count: usize,
    speed_mean: f64,
    speed_std: f64,
    travel_time_mean: f64,
    travel_time_std: f64,
    fuel_mean: f64,
    fuel_std: f64,
    trip_cost_mean: f64,
    trip_cost_std: f64,
}

pub fn write_stats_csv<W: Write>(stats: &[BinStats], writer: W) -> Result<()> {
    write_rows(
        writer,
        stats.iter().map(|s| StatsRow {
            approach: s.approach,
            density: s.density,
            bin_lo: s.bin_lo,
            bin_hi: s.bin_hi,
            count: s.count,
            speed_mean: s.speed.mean,
            speed_std: s.speed.std,
            travel_time_mean: s.travel_time.mean,
            travel_time_std: s.travel_time.std,
            fuel_mean: s.fuel.mean,
            fuel_std: s.fuel.std,
            trip_cost_mean: s.trip_cost.mean,
            trip_cost_std: s.trip_cost.std,
        }),
    )
}

pub fn write_gains_csv<W: Write>(table: &GainTable, writer: W) -> Result<()> {
    if table.rows.is_empty() {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["density", "bin_lo", "bin_hi", "approach", "count", "mean_trip_cost", "baseline_trip_cost", "gain"])?;
        w.flush()?;
        return Ok(());
    }
    write_rows(writer, &table.rows)
}

pub fn write_audit_csv<W: Write>(audit: &[AuditRecord], writer: W) -> Result<()> {
    if audit.is_empty() {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "vehicle", "individual_cost", "best_platoon_cost", "target", "decision"])?;
        w.flush()?;
        return Ok(());
    }
    write_rows(writer, audit)
}

/// Streams the per-step vehicle trace.
pub struct TraceWriter<'a> {
    inner: csv::Writer<&'a mut dyn Write>,
}

impl<'a> TraceWriter<'a> {
    pub fn new(writer: &'a mut dyn Write) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        inner.write_record(["t", "id", "pos", "lane", "speed", "mode", "platoon_id"])?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, world: &World) -> Result<()> {
        for row in world.trace_rows() {
            self.inner.serialize(row)?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

#[derive(Serialize)]
struct ManifestRun {
    approach: Approach,
    density_per_km_lane: f64,
    seed: u64,
    records: usize,
    incomplete: usize,
    error: Option<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    runs: Vec<ManifestRun>,
    config: &'a Config,
}

/// Writes the full configuration and the list of runs as TOML.
pub fn write_manifest<W: Write>(cfg: &Config, cells: &[CellResult], mut writer: W) -> Result<()> {
    let runs = cells
        .iter()
        .map(|c| ManifestRun {
            approach: c.approach,
            density_per_km_lane: c.density,
            seed: c.seed,
            records: c.outcome.as_ref().map_or(0, |o| o.records.len()),
            incomplete: c.outcome.as_ref().map_or(0, |o| o.incomplete),
            error: c.outcome.as_ref().err().cloned(),
        })
        .collect();
    let manifest = Manifest { version: env!("CARGO_PKG_VERSION"), runs, config: cfg };
    let text = toml::to_string_pretty(&manifest).map_err(|e| crate::Error::Config(e.to_string()))?;
    writer.write_all(text.as_bytes())?;
    Ok(())
}
