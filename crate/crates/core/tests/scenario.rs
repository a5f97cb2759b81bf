mod common;

use common::min_gap;
use platoon_core::mobility::{Approach, World, WorldConfig};
use platoon_core::scenario::{sample_trip, DemandConfig, Freeway};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn origins_are_uniform_over_feasible_ramps() {
    let freeway = Freeway::default();
    let origins = freeway.feasible_origins(50_000.0);
    assert_eq!(origins, vec![10_000.0, 20_000.0, 30_000.0, 40_000.0, 50_000.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 100_000;
    let mut counts = vec![0usize; origins.len()];
    for _ in 0..n {
        let t = sample_trip(&freeway, 50_000.0, &mut rng).unwrap();
        assert_eq!(t.length_m(), 50_000.0);
        counts[origins.iter().position(|&o| o == t.origin_m).unwrap()] += 1;
    }
    let expected = n as f64 / origins.len() as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 99th percentile of chi-squared with 4 degrees of freedom.
    assert!(chi2 < 13.277, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn reference_demand() {
    let d = DemandConfig::for_density(&Freeway::default(), 50_000.0, 5.0).unwrap();
    assert_eq!(d.desired_vehicle_count, 1500);
    assert!((d.departure_rate_per_h - 3564.0).abs() <= 2.0);
}

fn world(density: f64, seed: u64) -> World {
    World::new(WorldConfig { density, seed, spawning: false, ..WorldConfig::default() }).unwrap()
}

#[test]
fn prefill_places_the_desired_count() {
    assert_eq!(world(5.0, 0).vehicles().len(), 1500);
    assert!(world(0.0, 0).vehicles().is_empty());
}

#[test]
fn prefill_keeps_safety_gaps() {
    for (density, seed) in [(5.0, 0), (15.0, 1), (25.0, 2)] {
        let w = world(density, seed);
        let d = &w.config().dynamics;
        let mut lanes: Vec<Vec<_>> = vec![Vec::new(); w.config().freeway.lanes];
        for v in w.vehicles() {
            lanes[v.lane].push(v);
        }
        for lane in &mut lanes {
            lane.sort_by(|a, b| a.position.total_cmp(&b.position));
            for pair in lane.windows(2) {
                let (f, p) = (pair[0], pair[1]);
                let gap = p.rear() - f.position;
                let needed = d.min_gap_m.max(d.acc_headway_s * f.speed);
                assert!(gap >= needed - 1e-9, "density {density}: gap {gap} < {needed} behind {}", p.id);
            }
        }
        for v in w.vehicles() {
            assert!(v.position >= v.profile.trip.origin_m && v.position < v.profile.trip.destination_m);
        }
    }
}

#[test]
fn long_run_count_tracks_desired_density() {
    let mut w = World::new(WorldConfig { density: 5.0, approach: Approach::Acc, ..WorldConfig::default() }).unwrap();
    let mut samples = Vec::new();
    while w.time() < 3600.0 {
        w.step().unwrap();
        if w.time() >= 1800.0 && w.time() % 60.0 == 0.0 {
            samples.push(w.vehicles().len() as f64);
        }
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    assert!((mean - 1500.0).abs() <= 150.0, "mean count {mean}");
    assert!(min_gap(&w) > 0.0);
}

#[test]
fn blocked_ramp_defers_insertion() {
    let freeway = Freeway { length_m: 4_000.0, lanes: 1, ramp_interval_m: 2_000.0, ramp_at_zero: true };
    let cfg = WorldConfig { freeway, trip_length_m: 2_000.0, density: 25.0, prefill: false, ..WorldConfig::default() };
    let mut w = World::new(cfg).unwrap();
    for _ in 0..120 {
        w.step().unwrap();
        assert!(w.vehicles().len() < 2 || min_gap(&w) > 0.0);
    }
    assert!(w.counters().deferred_insertions > 0);
}
