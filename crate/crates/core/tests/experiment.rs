use platoon_core::config::Config;
use platoon_core::experiment::{
    bin_and_aggregate, bin_of, gain_vs_baseline, read_records_csv, run_experiment, write_gains_csv,
    write_records_csv, write_stats_csv, ExperimentRecord,
};
use platoon_core::mobility::Approach;
use platoon_core::Error;

fn rec(approach: Approach, density: f64, c_time: f64, cost: f64, speed: f64) -> ExperimentRecord {
    ExperimentRecord {
        vehicle: 0,
        approach,
        density,
        seed: 0,
        c_time,
        desired_speed: 30.0,
        depart_time: 1000.0,
        arrival_time: 1000.0 + 20_000.0 / speed,
        travel_time: 20_000.0 / speed,
        distance_m: 20_000.0,
        mean_speed: speed,
        fuel: 1.5,
        trip_cost: cost,
        time_in_platoon: 0.0,
    }
}

#[test]
fn binning_is_left_closed() {
    assert_eq!(bin_of(23.4, 5.0), 20.0);
    assert_eq!(bin_of(25.0, 5.0), 25.0);
    assert_eq!(bin_of(0.0, 5.0), 0.0);
    assert_eq!(bin_of(74.99, 5.0), 70.0);
}

#[test]
fn aggregates_match_hand_computed_values() {
    let records = vec![
        rec(Approach::Acc, 5.0, 21.0, 6.0, 30.0),
        rec(Approach::Acc, 5.0, 24.9, 8.0, 34.0),
        rec(Approach::Acc, 5.0, 25.0, 9.0, 36.0),
        rec(Approach::TripCost, 5.0, 22.0, 6.3, 31.0),
        rec(Approach::TripCost, 15.0, 22.0, 5.0, 25.0),
    ];
    let stats = bin_and_aggregate(&records, 5.0);
    assert_eq!(stats.len(), 4);
    let acc20 = stats.iter().find(|s| s.approach == Approach::Acc && s.bin_lo == 20.0).unwrap();
    assert_eq!(acc20.count, 2);
    assert!((acc20.trip_cost.mean - 7.0).abs() < 1e-12);
    assert!((acc20.trip_cost.std - 1.0).abs() < 1e-12);
    assert!((acc20.speed.mean - 32.0).abs() < 1e-12);
    assert!((acc20.travel_time.mean - (20_000.0 / 30.0 + 20_000.0 / 34.0) / 2.0).abs() < 1e-9);
    let single = stats.iter().find(|s| s.approach == Approach::Acc && s.bin_lo == 25.0).unwrap();
    assert_eq!((single.count, single.trip_cost.mean, single.trip_cost.std), (1, 9.0, 0.0));

    let gains = gain_vs_baseline(&stats, Approach::Acc).unwrap();
    let tc = gains.rows.iter().find(|g| g.approach == Approach::TripCost).unwrap();
    assert!((tc.gain - 0.1).abs() < 1e-12);
    assert!(gains.rows.iter().filter(|g| g.approach == Approach::Acc).all(|g| g.gain == 0.0));
    // Density 15 has no baseline and is reported rather than guessed.
    assert_eq!(gains.warnings.len(), 1);
}

#[test]
fn costlier_than_baseline_is_negative() {
    let records = vec![rec(Approach::Acc, 5.0, 10.0, 10.0, 30.0), rec(Approach::Human, 5.0, 10.0, 11.0, 30.0)];
    let gains = gain_vs_baseline(&bin_and_aggregate(&records, 5.0), Approach::Acc).unwrap();
    let human = gains.rows.iter().find(|g| g.approach == Approach::Human).unwrap();
    assert!((human.gain + 0.1).abs() < 1e-12);
}

#[test]
fn missing_baseline_is_an_error() {
    let records = vec![rec(Approach::TripCost, 5.0, 10.0, 10.0, 30.0)];
    let err = gain_vs_baseline(&bin_and_aggregate(&records, 5.0), Approach::Acc).unwrap_err();
    assert!(matches!(err, Error::MissingBaseline(_)));
}

#[test]
fn records_round_trip_through_csv() {
    let records = vec![rec(Approach::Similarity, 5.0, 12.345_678_9, 4.2, 29.5), rec(Approach::Human, 15.0, 70.1, 9.9, 40.0)];
    let mut buf = Vec::new();
    write_records_csv(&records, &mut buf).unwrap();
    assert!(String::from_utf8_lossy(&buf).starts_with(
        "vehicle,approach,density,seed,c_time,desired_speed,depart_time,arrival_time,travel_time,distance_m,mean_speed,fuel,trip_cost,time_in_platoon\n"
    ));
    assert_eq!(read_records_csv(&buf[..]).unwrap(), records);

    let stats = bin_and_aggregate(&records, 5.0);
    let mut out = Vec::new();
    write_stats_csv(&stats, &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 3);
    let mut out = Vec::new();
    write_gains_csv(&Default::default(), &mut out).unwrap();
    assert_eq!(
        String::from_utf8(out).unwrap(),
        "density,bin_lo,bin_hi,approach,count,mean_trip_cost,baseline_trip_cost,gain\n"
    );
}

#[test]
fn matrix_runs_every_cell_in_order() {
    let mut cfg = Config::desk_scale();
    cfg.scenario.duration_s = 300.0;
    cfg.scenario.warmup_s = 0.0;
    let cells = run_experiment(&cfg, &[Approach::Acc, Approach::TripCost], &[5.0], &[0, 1]);
    let order: Vec<_> = cells.iter().map(|c| (c.approach, c.seed)).collect();
    assert_eq!(order, vec![(Approach::Acc, 0), (Approach::Acc, 1), (Approach::TripCost, 0), (Approach::TripCost, 1)]);
    assert!(cells.iter().all(|c| c.outcome.is_ok()));
    let again = run_experiment(&cfg, &[Approach::Acc, Approach::TripCost], &[5.0], &[0, 1]);
    for (a, b) in cells.iter().zip(&again) {
        assert_eq!(a.outcome.as_ref().unwrap().records, b.outcome.as_ref().unwrap().records);
    }
}
