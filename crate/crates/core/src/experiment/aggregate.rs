use std::collections::BTreeMap;

use serde::Serialize;

use super::ExperimentRecord;
use crate::error::{Error, Result};
use crate::mobility::Approach;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MetricStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl MetricStats {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count() as f64;
        let mean = values.clone().sum::<f64>() / n;
        let var = values.map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

/// Statistics of one (approach, density, time-cost bin) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinStats {
    pub approach: Approach,
    pub density: f64,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: usize,
    pub speed: MetricStats,
    pub travel_time: MetricStats,
    pub fuel: MetricStats,
    pub trip_cost: MetricStats,
}

/// Lower edge of the left-closed bin holding `c_time`.
pub fn bin_of(c_time: f64, width: f64) -> f64 {
    (c_time / width).floor() * width
}

/// Mean and standard deviation per approach, density and time-cost bin.
/// Empty bins produce no row.
pub fn bin_and_aggregate(records: &[ExperimentRecord], bin_width: f64) -> Vec<BinStats> {
    let mut groups: BTreeMap<(Approach, u64, i64), Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        let bin = (r.c_time / bin_width).floor() as i64;
        groups.entry((r.approach, r.density.to_bits(), bin)).or_default().push(r);
    }
    let mut out: Vec<BinStats> = groups
        .into_iter()
        .map(|((approach, density, bin), rs)| BinStats {
            approach,
            density: f64::from_bits(density),
            bin_lo: bin as f64 * bin_width,
            bin_hi: (bin + 1) as f64 * bin_width,
            count: rs.len(),
            speed: MetricStats::of(rs.iter().map(|r| r.mean_speed)),
            travel_time: MetricStats::of(rs.iter().map(|r| r.travel_time)),
            fuel: MetricStats::of(rs.iter().map(|r| r.fuel)),
            trip_cost: MetricStats::of(rs.iter().map(|r| r.trip_cost)),
        })
        .collect();
    out.sort_by(|a, b| {
        a.approach.cmp(&b.approach).then(a.density.total_cmp(&b.density)).then(a.bin_lo.total_cmp(&b.bin_lo))
    });
    out
}

/// Relative trip-cost gain of one approach over the baseline in one bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainRow {
    pub density: f64,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub approach: Approach,
    pub count: usize,
    pub mean_trip_cost: f64,
    pub baseline_trip_cost: f64,
    /// Positive when the approach is cheaper than the baseline.
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GainTable {
    pub rows: Vec<GainRow>,
    /// Bins skipped because the baseline had no trips there.
    pub warnings: Vec<String>,
}

/// Gain of every approach against `baseline` on binned mean trip cost:
/// `(baseline - approach) / baseline`.
pub fn gain_vs_baseline(stats: &[BinStats], baseline: Approach) -> Result<GainTable> {
    let base: BTreeMap<(u64, u64), f64> = stats
        .iter()
        .filter(|s| s.approach == baseline)
        .map(|s| ((s.density.to_bits(), s.bin_lo.to_bits()), s.trip_cost.mean))
        .collect();
    if base.is_empty() && !stats.is_empty() {
        return Err(Error::MissingBaseline(format!("no {baseline} records")));
    }
    let mut table = GainTable::default();
    for s in stats {
        match base.get(&(s.density.to_bits(), s.bin_lo.to_bits())) {
            Some(&b) => table.rows.push(GainRow {
                density: s.density,
                bin_lo: s.bin_lo,
                bin_hi: s.bin_hi,
                approach: s.approach,
                count: s.count,
                mean_trip_cost: s.trip_cost.mean,
                baseline_trip_cost: b,
                gain: (b - s.trip_cost.mean) / b,
            }),
            None => table.warnings.push(format!(
                "no {baseline} trips at density {} in bin [{}, {}), {} skipped",
                s.density, s.bin_lo, s.bin_hi, s.approach
            )),
        }
    }
    Ok(table)
}
