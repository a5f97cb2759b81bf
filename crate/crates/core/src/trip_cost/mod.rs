//! Monetary trip cost: fuel model, slipstream factors, time monetization and
//! the single-vehicle analysis built on top of them.
//!
//! The total cost of a trip is the fuel it burns priced per liter plus the
//! time it takes priced per hour. Everything else in this module exists to
//! estimate those two quantities.

pub mod analysis;
pub mod fuel;
pub mod monetization;
pub mod slipstream;

pub use fuel::{fuel_for_constant_speed, fuel_for_speed_change, fuel_rate, FuelModelCoefficients, SpeedChange};
pub use monetization::{desired_speed_from_time_cost, TimeCostDistribution, MAX_DESIRED_SPEED, MIN_DESIRED_SPEED};
pub use slipstream::{slipstream_factor, PlatoonRole, SlipstreamModel};

use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite_nonneg, Error, Result};

/// Upper bound of the per-hour value of time.
pub const MAX_TIME_COST_PER_HOUR: f64 = 75.0;

/// Fuel price used throughout the simulation study (Euro-super 95, April 2023).
pub const DEFAULT_FUEL_PRICE_PER_LITER: f64 = 1.84;

/// Prices a driver attaches to fuel and to travel time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Euro per hour of travel time.
    pub time_cost_per_hour: f64,
    /// Euro per liter of fuel.
    pub fuel_price_per_liter: f64,
}

impl CostParams {
    pub fn new(time_cost_per_hour: f64, fuel_price_per_liter: f64) -> Result<Self> {
        if !(0.0..=MAX_TIME_COST_PER_HOUR).contains(&time_cost_per_hour) {
            return Err(Error::Domain(format!(
                "time cost must lie in [0, {MAX_TIME_COST_PER_HOUR}] EUR/h, got {time_cost_per_hour}"
            )));
        }
        ensure_finite_nonneg("fuel price", fuel_price_per_liter)?;
        Ok(Self { time_cost_per_hour, fuel_price_per_liter })
    }

    /// Both prices multiplied by `k`.
    ///
    /// Used for sensitivity runs; the result may exceed the 75 EUR/h cap that
    /// applies to monetized time values.
    pub fn scaled(self, k: f64) -> Self {
        Self {
            time_cost_per_hour: self.time_cost_per_hour * k,
            fuel_price_per_liter: self.fuel_price_per_liter * k,
        }
    }
}

/// Fuel, duration and distance of a (partial) trip.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TripEstimate {
    pub fuel_liters: f64,
    pub duration_hours: f64,
    pub distance_m: f64,
}

impl TripEstimate {
    pub fn new(fuel_liters: f64, duration_hours: f64, distance_m: f64) -> Result<Self> {
        ensure_finite_nonneg("fuel", fuel_liters)?;
        ensure_finite_nonneg("duration", duration_hours)?;
        ensure_finite_nonneg("distance", distance_m)?;
        Ok(Self { fuel_liters, duration_hours, distance_m })
    }

    pub fn from_seconds(fuel_liters: f64, duration_s: f64, distance_m: f64) -> Result<Self> {
        Self::new(fuel_liters, duration_s / 3600.0, distance_m)
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_hours * 3600.0
    }
}

impl Add for TripEstimate {
    type Output = TripEstimate;

    fn add(self, rhs: Self) -> Self::Output {
        TripEstimate {
            fuel_liters: self.fuel_liters + rhs.fuel_liters,
            duration_hours: self.duration_hours + rhs.duration_hours,
            distance_m: self.distance_m + rhs.distance_m,
        }
    }
}

/// Monetary cost of a trip: `fuel * fuel_price + duration * time_cost`.
pub fn total_trip_cost(estimate: &TripEstimate, params: &CostParams) -> Result<f64> {
    ensure_finite_nonneg("fuel", estimate.fuel_liters)?;
    ensure_finite_nonneg("duration", estimate.duration_hours)?;
    ensure_finite_nonneg("distance", estimate.distance_m)?;
    ensure_finite_nonneg("fuel price", params.fuel_price_per_liter)?;
    ensure_finite_nonneg("time cost", params.time_cost_per_hour)?;
    Ok(estimate.fuel_liters * params.fuel_price_per_liter
        + estimate.duration_hours * params.time_cost_per_hour)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_trip_costs_nothing() {
        let p = CostParams::new(42.0, 1.84).unwrap();
        assert_eq!(total_trip_cost(&TripEstimate::default(), &p).unwrap(), 0.0);
    }

    #[test]
    fn direct_arithmetic() {
        let p = CostParams::new(20.0, 1.84).unwrap();
        let e = TripEstimate::new(4.0, 0.5, 0.0).unwrap();
        let c = total_trip_cost(&e, &p).unwrap();
        assert!((c - 17.36).abs() < 1e-12, "{c}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = CostParams::new(20.0, 1.84).unwrap();
        let bad = TripEstimate { fuel_liters: -1.0, duration_hours: 1.0, distance_m: 0.0 };
        assert!(matches!(total_trip_cost(&bad, &p), Err(Error::Domain(_))));
        let nan = TripEstimate { fuel_liters: 1.0, duration_hours: f64::NAN, distance_m: 0.0 };
        assert!(total_trip_cost(&nan, &p).is_err());
        assert!(CostParams::new(76.0, 1.0).is_err());
        assert!(CostParams::new(-0.1, 1.0).is_err());
        assert!(CostParams::new(10.0, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn additive_over_trip_parts(f1 in 0.0..50.0f64, h1 in 0.0..3.0f64, f2 in 0.0..50.0f64,
                                    h2 in 0.0..3.0f64, ct in 0.0..75.0f64, cf in 0.0..3.0f64) {
            let p = CostParams::new(ct, cf).unwrap();
            let a = TripEstimate::new(f1, h1, 0.0).unwrap();
            let b = TripEstimate::new(f2, h2, 0.0).unwrap();
            let lhs = total_trip_cost(&(a + b), &p).unwrap();
            let rhs = total_trip_cost(&a, &p).unwrap() + total_trip_cost(&b, &p).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(1.0));
        }

        #[test]
        fn zero_price_ignores_its_quantity(f in 0.0..50.0f64, h in 0.0..3.0f64, h2 in 0.0..3.0f64, cf in 0.0..3.0f64) {
            let p = CostParams::new(0.0, cf).unwrap();
            let a = total_trip_cost(&TripEstimate::new(f, h, 0.0).unwrap(), &p).unwrap();
            let b = total_trip_cost(&TripEstimate::new(f, h2, 0.0).unwrap(), &p).unwrap();
            prop_assert_eq!(a, b);
            let q = CostParams::new(cf * 10.0, 0.0).unwrap();
            let a = total_trip_cost(&TripEstimate::new(f, h, 0.0).unwrap(), &q).unwrap();
            let b = total_trip_cost(&TripEstimate::new(f * 2.0, h, 0.0).unwrap(), &q).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
