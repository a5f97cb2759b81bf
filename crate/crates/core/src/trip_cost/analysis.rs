//! Single-vehicle analysis of the trip-cost metric on an empty freeway.
//!
//! A driver with time cost `c_time` drives at the speed given by
//! [`desired_speed_from_time_cost`]. In the platoon mode the same vehicle
//! drives mid-platoon at its desired speed shifted by a constant adjustment,
//! capped at the maximum speed.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{
    desired_speed_from_time_cost, fuel_for_constant_speed, slipstream_factor, total_trip_cost, CostParams,
    FuelModelCoefficients, PlatoonRole, SlipstreamModel, TripEstimate,
};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub trip_length_m: f64,
    pub c_time_max_eur_per_h: f64,
    pub c_time_step_eur_per_h: f64,
    pub adjustment_min_mps: f64,
    pub adjustment_max_mps: f64,
    pub adjustment_step_mps: f64,
    pub fuel_price_max_eur_per_l: f64,
    pub fuel_price_step_eur_per_l: f64,
    pub max_speed_mps: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            trip_length_m: 50_000.0,
            c_time_max_eur_per_h: 75.0,
            c_time_step_eur_per_h: 5.0,
            adjustment_min_mps: -5.0,
            adjustment_max_mps: 5.0,
            adjustment_step_mps: 1.0,
            fuel_price_max_eur_per_l: 2.5,
            fuel_price_step_eur_per_l: 0.5,
            max_speed_mps: 55.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalysisMode {
    Human,
    Platoon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub c_time: f64,
    pub adjustment: f64,
    pub fuel_price: f64,
    pub mode: AnalysisMode,
    pub travel_time_s: f64,
    pub fuel_l: f64,
    pub trip_cost_eur: f64,
}

/// Inclusive grid `0, step, 2·step, ..., max` computed by index to avoid drift.
fn grid(min: f64, max: f64, step: f64) -> Vec<f64> {
    let n = ((max - min) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| min + i as f64 * step).collect()
}

pub fn run_numerical_analysis(
    config: &AnalysisConfig,
    coeffs: &FuelModelCoefficients,
    slipstream: &SlipstreamModel,
) -> Result<Vec<AnalysisRow>> {
    let c_times = grid(0.0, config.c_time_max_eur_per_h, config.c_time_step_eur_per_h);
    let adjustments = grid(config.adjustment_min_mps, config.adjustment_max_mps, config.adjustment_step_mps);
    let prices = grid(0.0, config.fuel_price_max_eur_per_l, config.fuel_price_step_eur_per_l);
    let mid = slipstream_factor(PlatoonRole::Mid, slipstream);
    let distance = config.trip_length_m;

    let mut rows = Vec::with_capacity(c_times.len() * adjustments.len() * prices.len() * 2);
    for &c_time in &c_times {
        let desired = desired_speed_from_time_cost(c_time)?;
        let human = TripEstimate::from_seconds(fuel_for_constant_speed(desired, distance, coeffs)?, distance / desired, distance)?;
        for &adjustment in &adjustments {
            let speed = (desired + adjustment).min(config.max_speed_mps);
            let platoon = TripEstimate::from_seconds(
                fuel_for_constant_speed(speed, distance, coeffs)? * mid,
                distance / speed,
                distance,
            )?;
            for &fuel_price in &prices {
                let params = CostParams { time_cost_per_hour: c_time, fuel_price_per_liter: fuel_price };
                for (mode, est) in [(AnalysisMode::Human, &human), (AnalysisMode::Platoon, &platoon)] {
                    rows.push(AnalysisRow {
                        c_time,
                        adjustment,
                        fuel_price,
                        mode,
                        travel_time_s: est.duration_s(),
                        fuel_l: est.fuel_liters,
                        trip_cost_eur: total_trip_cost(est, &params)?,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Writes rows as CSV with header
/// `c_time,adjustment,fuel_price,mode,travel_time_s,fuel_l,trip_cost_eur`.
pub fn write_analysis_csv<W: Write>(rows: &[AnalysisRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean and standard deviation over speed adjustments, per `(c_time, fuel_price, mode)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSummary {
    pub c_time: f64,
    pub fuel_price: f64,
    pub mode: AnalysisMode,
    pub mean_trip_cost: f64,
    pub std_trip_cost: f64,
}

pub fn summarize_over_adjustments(rows: &[AnalysisRow]) -> Vec<AnalysisSummary> {
    let mut out: Vec<(AnalysisSummary, Vec<f64>)> = Vec::new();
    for r in rows {
        match out
            .iter_mut()
            .find(|(s, _)| s.c_time == r.c_time && s.fuel_price == r.fuel_price && s.mode == r.mode)
        {
            Some((_, v)) => v.push(r.trip_cost_eur),
            None => out.push((
                AnalysisSummary {
                    c_time: r.c_time,
                    fuel_price: r.fuel_price,
                    mode: r.mode,
                    mean_trip_cost: 0.0,
                    std_trip_cost: 0.0,
                },
                vec![r.trip_cost_eur],
            )),
        }
    }
    out.into_iter()
        .map(|(mut s, v)| {
            let n = v.len() as f64;
            s.mean_trip_cost = v.iter().sum::<f64>() / n;
            s.std_trip_cost = (v.iter().map(|x| (x - s.mean_trip_cost).powi(2)).sum::<f64>() / n).sqrt();
            s
        })
        .collect()
}
