//! Instantaneous fuel-rate model and the closed-form integrals built from it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite_nonneg, Error, Result};

const DEFAULT_TABLE: &str = include_str!("../../data/pc_g_eu4.toml");

/// Speed envelope of the model in m/s.
pub const MODEL_MAX_SPEED: f64 = 55.0;
/// Acceleration envelope of the model in m/s².
pub const MODEL_MIN_ACCEL: f64 = -10.0;
pub const MODEL_MAX_ACCEL: f64 = 2.5;

/// Coefficients of `rate[l/h] = c0 + c1·a·v + c2·a²·v + c3·v + c4·v² + c5·v³`
/// with `v` in km/h and `a` in m/s².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuelModelCoefficients {
    /// Emission class label, e.g. `PC_G_EU4`.
    pub class: String,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
}

impl Default for FuelModelCoefficients {
    fn default() -> Self {
        Self::parse(DEFAULT_TABLE).expect("bundled coefficient table is valid")
    }
}

impl FuelModelCoefficients {
    /// Parses a coefficient table in the key-value format of `data/pc_g_eu4.toml`.
    pub fn parse(text: &str) -> Result<Self> {
        let coeffs: FuelModelCoefficients = toml::from_str(text)?;
        for (name, v) in [
            ("c0", coeffs.c0),
            ("c1", coeffs.c1),
            ("c2", coeffs.c2),
            ("c3", coeffs.c3),
            ("c4", coeffs.c4),
            ("c5", coeffs.c5),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("coefficient {name} is not finite")));
            }
        }
        Ok(coeffs)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn raw_liters_per_hour(&self, speed: f64, accel: f64) -> f64 {
        let v = speed * 3.6;
        self.c0
            + self.c1 * accel * v
            + self.c2 * accel * accel * v
            + self.c3 * v
            + self.c4 * v * v
            + self.c5 * v * v * v
    }
}

/// Fuel consumption rate in l/s at `speed` (m/s) and `acceleration` (m/s²).
///
/// Inputs are clamped to the model envelope and the result to be nonnegative.
pub fn fuel_rate(speed: f64, acceleration: f64, coeffs: &FuelModelCoefficients) -> f64 {
    let v = if speed.is_nan() { 0.0 } else { speed.clamp(0.0, MODEL_MAX_SPEED) };
    let a = if acceleration.is_nan() { 0.0 } else { acceleration.clamp(MODEL_MIN_ACCEL, MODEL_MAX_ACCEL) };
    coeffs.raw_liters_per_hour(v, a).max(0.0) / 3600.0
}

/// Fuel in liters to cover `distance` at constant `speed`.
pub fn fuel_for_constant_speed(speed: f64, distance: f64, coeffs: &FuelModelCoefficients) -> Result<f64> {
    ensure_finite_nonneg("distance", distance)?;
    ensure_finite_nonneg("speed", speed)?;
    if distance == 0.0 {
        return Ok(0.0);
    }
    if speed == 0.0 {
        return Err(Error::Domain("cannot cover a positive distance at zero speed".into()));
    }
    Ok(fuel_rate(speed, 0.0, coeffs) * (distance / speed))
}

/// Time, distance and fuel of a constant-acceleration speed change.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpeedChange {
    pub time_s: f64,
    pub distance_m: f64,
    pub fuel_l: f64,
}

/// Changes speed from `v_from` to `v_to` at `accel_magnitude`.
///
/// Fuel is the step duration times the rate at the mean speed of the ramp.
pub fn fuel_for_speed_change(
    v_from: f64,
    v_to: f64,
    accel_magnitude: f64,
    coeffs: &FuelModelCoefficients,
) -> Result<SpeedChange> {
    ensure_finite_nonneg("v_from", v_from)?;
    ensure_finite_nonneg("v_to", v_to)?;
    if !(accel_magnitude.is_finite() && accel_magnitude > 0.0) {
        return Err(Error::Domain(format!("acceleration magnitude must be positive, got {accel_magnitude}")));
    }
    if v_from == v_to {
        return Ok(SpeedChange::default());
    }
    let time_s = (v_to - v_from).abs() / accel_magnitude;
    let distance_m = (v_to * v_to - v_from * v_from).abs() / (2.0 * accel_magnitude);
    let signed = accel_magnitude * (v_to - v_from).signum();
    let fuel_l = time_s * fuel_rate(0.5 * (v_from + v_to), signed, coeffs);
    Ok(SpeedChange { time_s, distance_m, fuel_l })
}
