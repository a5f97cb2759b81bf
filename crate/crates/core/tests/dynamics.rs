mod common;

use common::{empty_world, min_gap, profile};
use platoon_core::mobility::{acc_accel, cacc_accel, krauss_speed, Approach, DynamicsConfig, Leader};

#[test]
fn acc_step_response_settles_without_overshoot() {
    let d = DynamicsConfig::default();
    let dt = d.step_s;
    let (v_lead, desired) = (30.0, 40.0);
    let (mut x_lead, mut x, mut v) = (1_000.0, 1_000.0 - 4.0 - (30.0 + 10.0), 30.0);
    let initial_error = 10.0;
    let mut worst_undershoot: f64 = 0.0;
    let mut last_error = initial_error;
    for _ in 0..300 {
        let gap = x_lead - 4.0 - x;
        let a = acc_accel(v, desired, Some(Leader { gap, speed: v_lead, accel: 0.0 }), &d);
        v += a * dt;
        x += v * dt;
        x_lead += v_lead * dt;
        last_error = (x_lead - 4.0 - x) - d.acc_headway_s * v;
        worst_undershoot = worst_undershoot.min(last_error);
    }
    assert!(last_error.abs() < 0.05, "did not settle: {last_error}");
    assert!((v - v_lead).abs() < 0.01);
    assert!(-worst_undershoot <= 0.05 * initial_error, "overshoot {worst_undershoot}");
}

#[test]
fn cacc_string_does_not_amplify_spacing_errors() {
    let d = DynamicsConfig::default();
    let dt = d.step_s;
    let n = 20;
    let len = d.vehicle_length_m;
    let mut x: Vec<f64> = (0..n).map(|k| 10_000.0 - k as f64 * (len + d.cacc_gap_m)).collect();
    let mut v = vec![30.0; n];
    // The first follower starts 2 m too far back.
    for xk in x.iter_mut().skip(1) {
        *xk -= 2.0;
    }
    let mut worst: Vec<f64> = (0..n)
        .map(|k| if k == 0 { 0.0 } else { (x[k - 1] - len - x[k] - d.cacc_gap_m).abs() })
        .collect();
    for step in 0..200 {
        let t = step as f64 * dt;
        let mut a = vec![0.0; n];
        a[0] = match t as usize % 40 {
            0..=4 => 2.0,
            10..=14 => -2.0,
            _ => 0.0,
        };
        let mut nx = x.clone();
        let mut nv = v.clone();
        nv[0] = v[0] + a[0] * dt;
        nx[0] = x[0] + nv[0] * dt;
        for k in 1..n {
            let pred = Leader { gap: x[k - 1] - len - x[k], speed: v[k - 1], accel: a[k - 1] };
            a[k] = cacc_accel(v[k], pred, &d);
            nv[k] = v[k] + a[k] * dt;
            nx[k] = x[k] + nv[k] * dt;
        }
        x = nx;
        v = nv;
        for k in 1..n {
            worst[k] = worst[k].max((x[k - 1] - len - x[k] - d.cacc_gap_m).abs());
        }
    }
    for k in 2..n {
        assert!(worst[k] <= worst[k - 1] + 1e-9, "spacing error grows at {k}: {worst:?}");
    }
    assert!(worst[1] >= 2.0 - 1e-9);
}

#[test]
fn krauss_column_reaches_steady_spacing() {
    let d = DynamicsConfig::default();
    let dt = d.step_s;
    let n = 5;
    let mut x: Vec<f64> = (0..n).map(|k| 5_000.0 - k as f64 * 60.0).collect();
    let mut v = vec![20.0; n];
    for _ in 0..600 {
        let old = (x.clone(), v.clone());
        for k in 0..n {
            let leader = (k > 0).then(|| Leader { gap: old.0[k - 1] - 4.0 - old.0[k], speed: old.1[k - 1], accel: 0.0 });
            v[k] = krauss_speed(old.1[k], 30.0, leader, &d, 0.0);
            x[k] += v[k] * dt;
        }
    }
    let before = v.clone();
    for k in 0..n {
        let leader = (k > 0).then(|| Leader { gap: x[k - 1] - 4.0 - x[k], speed: v[k - 1], accel: 0.0 });
        assert!((krauss_speed(v[k], 30.0, leader, &d, 0.0) - before[k]).abs() < 1e-6, "vehicle {k} still accelerating");
    }
    assert!(v.iter().all(|&s| (s - 30.0).abs() < 1e-6));
}

#[test]
fn empty_road_keeps_everyone_right() {
    let mut w = empty_world(Approach::Acc);
    for k in 0..5 {
        w.add_vehicle(profile(20.0, 30.0, 10_000.0, 60_000.0), 10_000.0 + 500.0 * k as f64, 2, 30.0).unwrap();
    }
    w.run_until(120.0).unwrap();
    assert!(w.vehicles().iter().all(|v| v.lane == 0));
}

#[test]
fn fast_vehicle_overtakes_slow_one() {
    let mut w = empty_world(Approach::Human);
    let slow = w.add_vehicle(profile(0.0, 22.0, 10_000.0, 60_000.0), 10_300.0, 0, 22.0).unwrap();
    let fast = w.add_vehicle(profile(60.0, 48.4, 10_000.0, 60_000.0), 10_000.0, 0, 35.0).unwrap();
    let mut used_left = false;
    while w.time() < 120.0 {
        w.step().unwrap();
        used_left |= w.vehicle(fast).unwrap().lane > 0;
        assert!(min_gap(&w) > 0.0);
    }
    assert!(used_left);
    assert!(w.vehicle(fast).unwrap().position > w.vehicle(slow).unwrap().position);
}
