#![allow(dead_code)]

use platoon_core::formation::{JoinPosition, ManeuverConfig, PlatooningOpportunity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fuel rate of the bundled coefficient table in l/s, written out by hand.
pub fn oracle_rate(v: f64, a: f64) -> f64 {
    let k = v.clamp(0.0, 55.0) * 3.6;
    let a = a.clamp(-10.0, 2.5);
    (0.8 + 0.12 * a * k + 0.004 * a * a * k + 3.8e-2 * k - 2.33e-4 * k * k + 3.54e-6 * k * k * k).max(0.0) / 3600.0
}

#[derive(Debug, Clone, Copy)]
pub struct Totals {
    pub time_s: f64,
    pub distance_m: f64,
    pub fuel_l: f64,
    /// Joiner position minus slot position at the end, signed toward the target.
    pub residual_gap: f64,
}

/// Forward integration of a ramp / cruise / ramp join with cruise duration `t2`.
fn fly(v0: f64, v_c: f64, v_t: f64, gap: f64, toward: f64, t2: f64, m: &ManeuverConfig, dt: f64) -> Totals {
    let (mut t, mut x, mut xt, mut v, mut fuel) = (0.0, 0.0, 0.0, v0, 0.0);
    let segment = |target: f64, duration: Option<f64>, t: &mut f64, x: &mut f64, xt: &mut f64, v: &mut f64, fuel: &mut f64| {
        let a = if target > *v { m.approach_accel_mps2 } else { -m.approach_decel_mps2 };
        let total = duration.unwrap_or(((target - *v) / a).abs());
        let steps = (total / dt).round() as usize;
        let h = if steps > 0 { total / steps as f64 } else { 0.0 };
        let a = if duration.is_some() { 0.0 } else { a };
        for _ in 0..steps {
            let nv = *v + a * h;
            *fuel += 0.5 * (oracle_rate(*v, a) + oracle_rate(nv, a)) * h;
            *x += 0.5 * (*v + nv) * h;
            *xt += v_t * h;
            *v = nv;
            *t += h;
        }
    };
    segment(v_c, None, &mut t, &mut x, &mut xt, &mut v, &mut fuel);
    segment(v_c, Some(t2), &mut t, &mut x, &mut xt, &mut v, &mut fuel);
    segment(v_t, None, &mut t, &mut x, &mut xt, &mut v, &mut fuel);
    Totals { time_s: t, distance_m: x, fuel_l: fuel, residual_gap: gap - toward * (x - xt) }
}

/// Join totals by numerical integration, with the cruise duration found by
/// bisection so that the gap is closed exactly (or zero if the ramps alone
/// already close it).
pub fn integrate_join(joiner_speed: f64, opp: &PlatooningOpportunity, v_c: f64, m: &ManeuverConfig, dt: f64) -> Totals {
    let toward = match opp.join_position {
        JoinPosition::Back => 1.0,
        JoinPosition::Front => -1.0,
    };
    let run = |t2: f64| fly(joiner_speed, v_c, opp.target_speed, opp.gap_to_target, toward, t2, m, dt);
    if run(0.0).residual_gap <= 0.0 {
        return run(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while run(hi).residual_gap > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if run(mid).residual_gap > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    run(0.5 * (lo + hi))
}

/// Random join situations of the kind the formation layer meets: target
/// within communication range, joiner speed close to its desired speed.
pub fn random_join_cases(n: usize, seed: u64) -> Vec<(f64, PlatooningOpportunity)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let back = rng.random_bool(0.5);
            let target_speed = rng.random_range(22.0..45.0);
            let joiner_speed = rng.random_range(22.0..45.0);
            let gap = rng.random_range(10.0..500.0);
            let opp = PlatooningOpportunity {
                target_vehicle: i as u64,
                target_platoon: None,
                join_position: if back { JoinPosition::Back } else { JoinPosition::Front },
                target_speed,
                target_desired_speed: target_speed,
                gap_to_target: gap,
                distance: gap,
                member_destinations: vec![1e6],
                platoon_size: 1,
            };
            (joiner_speed, opp)
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(1e-12)
    }
}

use platoon_core::mobility::{Approach, DriverProfile, World, WorldConfig};
use platoon_core::scenario::TripPlan;
use platoon_core::trip_cost::CostParams;

/// A world without prefill or demand on the reference freeway.
pub fn empty_world(approach: Approach) -> World {
    World::new(WorldConfig { approach, prefill: false, spawning: false, density: 0.0, ..WorldConfig::default() }).unwrap()
}

pub fn profile(c_time: f64, desired: f64, origin: f64, destination: f64) -> DriverProfile {
    DriverProfile {
        cost: CostParams::new(c_time, 1.84).unwrap(),
        desired_speed: desired,
        trip: TripPlan { origin_m: origin, destination_m: destination },
    }
}

/// Smallest bumper-to-bumper gap between consecutive vehicles of any lane.
pub fn min_gap(world: &World) -> f64 {
    let mut by_lane: Vec<Vec<(f64, f64)>> = vec![Vec::new(); world.config().freeway.lanes];
    for v in world.vehicles() {
        by_lane[v.lane].push((v.position, v.rear()));
    }
    let mut min = f64::INFINITY;
    for lane in &mut by_lane {
        lane.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in lane.windows(2) {
            min = min.min(w[1].1 - w[0].0);
        }
    }
    min
}

/// Mode (peak of a Gaussian-smoothed 0.1 EUR/h histogram), median and mean.
pub fn mode_median_mean(samples: &[f64]) -> (f64, f64, f64) {
    let width = 0.1;
    let bins = (75.0 / width) as usize + 1;
    let mut hist = vec![0.0; bins];
    for &s in samples {
        hist[((s / width) as usize).min(bins - 1)] += 1.0;
    }
    let sigma = 10.0;
    let kernel: Vec<f64> = (-40..=40).map(|k: i32| (-(k as f64 / sigma).powi(2) / 2.0).exp()).collect();
    let smooth = |i: usize| -> f64 {
        kernel
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let j = i as i64 + k as i64 - 40;
                if (0..bins as i64).contains(&j) { w * hist[j as usize] } else { 0.0 }
            })
            .sum()
    };
    // Stay away from the cap at 75, which collects the tail.
    let peak = (0..bins - 50).max_by(|&a, &b| smooth(a).total_cmp(&smooth(b))).unwrap();
    let mode = (peak as f64 + 0.5) * width;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    (mode, median, mean)
}
