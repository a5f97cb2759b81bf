//! Ramped freeway geometry, trip sampling and the density-maintaining demand.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Straight multi-lane freeway with on/off ramps at regular intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Freeway {
    pub length_m: f64,
    pub lanes: usize,
    pub ramp_interval_m: f64,
    /// Whether position 0 is an on-ramp.
    pub ramp_at_zero: bool,
}

impl Default for Freeway {
    fn default() -> Self {
        Self { length_m: 100_000.0, lanes: 3, ramp_interval_m: 10_000.0, ramp_at_zero: false }
    }
}

impl Freeway {
    pub fn validate(&self) -> Result<()> {
        if self.lanes == 0 {
            return Err(Error::Config("freeway needs at least one lane".into()));
        }
        if !(self.length_m > 0.0 && self.ramp_interval_m > 0.0) {
            return Err(Error::Config("freeway length and ramp interval must be positive".into()));
        }
        Ok(())
    }

    /// Ramp positions in increasing order.
    pub fn ramps(&self) -> Vec<f64> {
        let n = (self.length_m / self.ramp_interval_m + 1e-9).floor() as usize;
        let first = if self.ramp_at_zero { 0 } else { 1 };
        (first..=n).map(|i| i as f64 * self.ramp_interval_m).collect()
    }

    /// On-ramps from which a trip of `trip_length_m` ends exactly on a ramp.
    pub fn feasible_origins(&self, trip_length_m: f64) -> Vec<f64> {
        let ramps = self.ramps();
        ramps
            .iter()
            .copied()
            .filter(|&o| ramps.iter().any(|&d| (d - (o + trip_length_m)).abs() < 1e-6))
            .collect()
    }

    pub fn length_km(&self) -> f64 {
        self.length_m / 1000.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripPlan {
    pub origin_m: f64,
    pub destination_m: f64,
}

impl TripPlan {
    pub fn length_m(&self) -> f64 {
        self.destination_m - self.origin_m
    }
}

/// Picks an origin uniformly among the feasible on-ramps.
pub fn sample_trip<R: Rng + ?Sized>(freeway: &Freeway, trip_length_m: f64, rng: &mut R) -> Result<TripPlan> {
    let origins = freeway.feasible_origins(trip_length_m);
    if origins.is_empty() {
        return Err(Error::Config(format!(
            "no ramp pair {trip_length_m} m apart on a {} m freeway",
            freeway.length_m
        )));
    }
    let origin_m = origins[rng.random_range(0..origins.len())];
    Ok(TripPlan { origin_m, destination_m: origin_m + trip_length_m })
}

/// Departure rates (veh/h) for densities 5..25 veh/km/lane on the reference
/// 100 km, 3-lane freeway with 50 km trips.
const REFERENCE_RATES: [(f64, f64); 5] =
    [(5.0, 3564.0), (10.0, 7129.0), (15.0, 10693.0), (20.0, 14257.0), (25.0, 17822.0)];

/// Mean travel speed implied by the reference departure rates.
const REFERENCE_MEAN_SPEED: f64 = 33.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandConfig {
    pub desired_density: f64,
    pub desired_vehicle_count: usize,
    pub departure_rate_per_h: f64,
}

impl DemandConfig {
    /// Demand for `density` veh/km/lane. The reference geometry uses the
    /// tabulated rates verbatim; other geometries scale them by trip length.
    pub fn for_density(freeway: &Freeway, trip_length_m: f64, density: f64) -> Result<Self> {
        if !(density >= 0.0 && density.is_finite()) {
            return Err(Error::Config(format!("invalid density {density}")));
        }
        let count = (density * freeway.lanes as f64 * freeway.length_km()).round() as usize;
        let reference = freeway.length_m == 100_000.0 && freeway.lanes == 3 && trip_length_m == 50_000.0;
        let rate = REFERENCE_RATES
            .iter()
            .find(|(d, _)| reference && *d == density)
            .map(|&(_, r)| r)
            .unwrap_or_else(|| (count as f64 * REFERENCE_MEAN_SPEED / trip_length_m * 3600.0).round());
        Ok(Self { desired_density: density, desired_vehicle_count: count, departure_rate_per_h: rate })
    }
}

/// Converts a constant departure rate into whole insertion attempts per step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DepartureAccumulator {
    credit: f64,
}

impl DepartureAccumulator {
    pub fn advance(&mut self, rate_per_h: f64, dt: f64) -> usize {
        self.credit += rate_per_h * dt / 3600.0;
        let n = (self.credit + 1e-9).floor();
        self.credit -= n;
        n as usize
    }
}
