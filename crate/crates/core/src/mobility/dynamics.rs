//! Longitudinal controllers. All functions are pure; the world stepper feeds
//! them the state of the vehicle ahead in the same lane.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub step_s: f64,
    pub max_speed_mps: f64,
    pub max_accel_mps2: f64,
    pub max_decel_mps2: f64,
    pub vehicle_length_m: f64,
    /// Smallest bumper-to-bumper distance the collision guard tolerates.
    pub min_gap_m: f64,
    pub krauss_headway_s: f64,
    pub krauss_decel_mps2: f64,
    pub krauss_sigma: f64,
    pub acc_headway_s: f64,
    pub acc_spacing_gain_per_s2: f64,
    pub acc_speed_gain_per_s: f64,
    pub cacc_gap_m: f64,
    pub cacc_spacing_gain_per_s2: f64,
    pub cacc_speed_gain_per_s: f64,
    /// Seconds of free road at desired speed a driver looks ahead when
    /// deciding whether a slower vehicle is in the way.
    pub lane_change_lookahead_s: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            step_s: 1.0,
            max_speed_mps: 55.0,
            max_accel_mps2: 2.5,
            max_decel_mps2: 10.0,
            vehicle_length_m: 4.0,
            min_gap_m: 1.0,
            krauss_headway_s: 1.0,
            krauss_decel_mps2: 4.5,
            krauss_sigma: 0.0,
            acc_headway_s: 1.0,
            acc_spacing_gain_per_s2: 0.23,
            acc_speed_gain_per_s: 0.74,
            cacc_gap_m: 5.0,
            cacc_spacing_gain_per_s2: 1.0,
            cacc_speed_gain_per_s: 1.0,
            lane_change_lookahead_s: 3.0,
        }
    }
}

impl DynamicsConfig {
    pub fn clamp_accel(&self, a: f64) -> f64 {
        a.clamp(-self.max_decel_mps2, self.max_accel_mps2)
    }
}

/// State of the vehicle ahead as seen by its follower.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leader {
    /// Bumper-to-bumper distance.
    pub gap: f64,
    pub speed: f64,
    /// Acceleration the leader applies during the current step.
    pub accel: f64,
}

/// Krauss car following. `dawdle` in `[0, 1)` scales the imperfection and is
/// ignored when `sigma` is 0.
pub fn krauss_speed(speed: f64, desired: f64, leader: Option<Leader>, cfg: &DynamicsConfig, dawdle: f64) -> f64 {
    let dt = cfg.step_s;
    let mut v = (speed + cfg.max_accel_mps2 * dt).min(desired).min(cfg.max_speed_mps);
    if let Some(l) = leader {
        let tau = cfg.krauss_headway_s;
        let mean = 0.5 * (speed + l.speed);
        let v_safe = l.speed + (l.gap - l.speed * tau) / (mean / cfg.krauss_decel_mps2 + tau);
        v = v.min(v_safe);
    }
    if cfg.krauss_sigma > 0.0 {
        v -= cfg.krauss_sigma * cfg.max_accel_mps2 * dt * dawdle;
    }
    v.max(speed - cfg.max_decel_mps2 * dt).max(0.0)
}

/// Constant time-headway ACC: speed tracking on a free road, spacing and
/// relative-speed feedback behind a leader, whichever is lower.
pub fn acc_accel(speed: f64, desired: f64, leader: Option<Leader>, cfg: &DynamicsConfig) -> f64 {
    let free = cfg.acc_speed_gain_per_s * (desired - speed);
    let a = match leader {
        Some(l) => {
            let follow = cfg.acc_spacing_gain_per_s2 * (l.gap - cfg.acc_headway_s * speed)
                + cfg.acc_speed_gain_per_s * (l.speed - speed);
            free.min(follow)
        }
        None => free,
    };
    cfg.clamp_accel(a)
}

/// Simplified constant-spacing CACC for platoon followers.
///
/// Feeds forward the predecessor's acceleration and corrects spacing and
/// relative speed. With the default gains of `1/dt²` and `1/dt` a follower
/// that starts the step at the target gap mirrors its predecessor exactly.
pub fn cacc_accel(speed: f64, predecessor: Leader, cfg: &DynamicsConfig) -> f64 {
    let a = predecessor.accel
        + cfg.cacc_spacing_gain_per_s2 * (predecessor.gap - cfg.cacc_gap_m)
        + cfg.cacc_speed_gain_per_s * (predecessor.speed - speed);
    cfg.clamp_accel(a)
}

/// Speed a joiner aims for while closing `distance_to_slot` (positive when the
/// slot is ahead) on a target moving at `target_speed`.
///
/// Far from the slot this is the approach speed; close to it the command
/// follows a braking curve with `settle_accel` so the joiner arrives with the
/// target's speed, and never asks to cover more than the remaining distance
/// in one step.
pub fn approach_speed(target_speed: f64, approach_speed: f64, distance_to_slot: f64, settle_accel: f64, dt: f64) -> f64 {
    let d = distance_to_slot.abs();
    let offset = (approach_speed - target_speed).abs().min((2.0 * settle_accel * d).sqrt()).min(d / dt);
    (target_speed + distance_to_slot.signum() * offset).max(0.0)
}
