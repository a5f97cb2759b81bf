//! TOML configuration. Keys carry their unit; unknown keys are rejected.
//!
//! ```toml
//! [scenario]
//! road_length_m = 30000
//! trip_length_m = 20000
//! ramp_interval_m = 2000
//! duration_s = 4500
//! warmup_s = 900
//!
//! [sweep]
//! approaches = ["acc", "trip-cost"]
//! densities_per_km_lane = [5, 15]
//! seeds = [0, 1, 2]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formation::FormationConfig;
use crate::mobility::{Approach, DynamicsConfig, WorldConfig};
use crate::scenario::Freeway;
use crate::trip_cost::analysis::AnalysisConfig;
use crate::trip_cost::{
    CostParams, FuelModelCoefficients, SlipstreamModel, TimeCostDistribution, DEFAULT_FUEL_PRICE_PER_LITER,
    MAX_TIME_COST_PER_HOUR,
};

/// Where drivers' time costs come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeCostModel {
    /// Fitted income distribution.
    Income,
    /// Income distribution with mass at both extremes.
    Bathtub,
    /// Every driver uses `fixed_time_cost_eur_per_h`.
    Fixed,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub road_length_m: f64,
    pub lanes: usize,
    pub ramp_interval_m: f64,
    pub ramp_at_zero: bool,
    pub trip_length_m: f64,
    /// Density of a single simulation.
    pub density_per_km_lane: f64,
    /// Approach of a single simulation.
    pub approach: Approach,
    pub seed: u64,
    /// Total simulated time including warmup.
    pub duration_s: f64,
    /// Vehicles departing earlier are left out of the results.
    pub warmup_s: f64,
    pub time_cost_model: TimeCostModel,
    pub fixed_time_cost_eur_per_h: f64,
    pub fuel_price_eur_per_l: f64,
    /// Coefficient table replacing the bundled one, relative to the config file.
    pub fuel_model_file: Option<PathBuf>,
    pub prefill: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let freeway = Freeway::default();
        Self {
            road_length_m: freeway.length_m,
            lanes: freeway.lanes,
            ramp_interval_m: freeway.ramp_interval_m,
            ramp_at_zero: freeway.ramp_at_zero,
            trip_length_m: 50_000.0,
            density_per_km_lane: 5.0,
            approach: Approach::TripCost,
            seed: 0,
            duration_s: 7200.0,
            warmup_s: 1800.0,
            time_cost_model: TimeCostModel::Income,
            fixed_time_cost_eur_per_h: 25.0,
            fuel_price_eur_per_l: DEFAULT_FUEL_PRICE_PER_LITER,
            fuel_model_file: None,
            prefill: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub approaches: Vec<Approach>,
    pub densities_per_km_lane: Vec<f64>,
    pub seeds: Vec<u64>,
    pub bin_width_eur_per_h: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            approaches: Approach::ALL.to_vec(),
            densities_per_km_lane: vec![5.0, 10.0, 15.0, 20.0, 25.0],
            seeds: (0..5).collect(),
            bin_width_eur_per_h: 5.0,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub scenario: ScenarioConfig,
    pub dynamics: DynamicsConfig,
    pub formation: FormationConfig,
    pub sweep: SweepConfig,
    pub analysis: AnalysisConfig,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// The reduced scenario used for quick experiments: 30 km road, 20 km
    /// trips, ramps every 2 km, one hour measured after 15 minutes of warmup.
    pub fn desk_scale() -> Self {
        let mut cfg = Self::default();
        cfg.scenario.road_length_m = 30_000.0;
        cfg.scenario.trip_length_m = 20_000.0;
        cfg.scenario.ramp_interval_m = 2_000.0;
        cfg.scenario.duration_s = 4_500.0;
        cfg.scenario.warmup_s = 900.0;
        cfg.sweep.densities_per_km_lane = vec![5.0, 15.0];
        cfg.sweep.seeds = vec![0, 1, 2];
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        self.freeway().validate()?;
        if !(s.trip_length_m > 0.0 && s.trip_length_m <= s.road_length_m) {
            return Err(Error::Config(format!("trip_length_m must lie in (0, road_length_m], got {}", s.trip_length_m)));
        }
        if !(s.duration_s > 0.0 && s.warmup_s >= 0.0 && s.warmup_s < s.duration_s) {
            return Err(Error::Config("need duration_s > warmup_s >= 0".into()));
        }
        if !(0.0..=MAX_TIME_COST_PER_HOUR).contains(&s.fixed_time_cost_eur_per_h) {
            return Err(Error::Config("fixed_time_cost_eur_per_h must lie in [0, 75]".into()));
        }
        CostParams::new(0.0, s.fuel_price_eur_per_l)?;
        if !(self.sweep.bin_width_eur_per_h > 0.0) {
            return Err(Error::Config("bin_width_eur_per_h must be positive".into()));
        }
        let f = &self.formation;
        if !(f.execution_interval_s > 0.0 && f.communication_range_m > 0.0 && f.decision_cost_scale > 0.0) {
            return Err(Error::Config("formation interval, range and cost scale must be positive".into()));
        }
        if !(f.maneuver.approach_coefficient > 0.0) {
            return Err(Error::Config("approach_coefficient must be positive".into()));
        }
        let sim = &f.similarity;
        if !(sim.speed_window >= 0.0 && sim.search_range_m > 0.0 && (0.0..=1.0).contains(&sim.alpha)) {
            return Err(Error::Config("similarity needs speed_window >= 0, search_range_m > 0, alpha in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn freeway(&self) -> Freeway {
        let s = &self.scenario;
        Freeway {
            length_m: s.road_length_m,
            lanes: s.lanes,
            ramp_interval_m: s.ramp_interval_m,
            ramp_at_zero: s.ramp_at_zero,
        }
    }

    pub fn time_cost_distribution(&self) -> TimeCostDistribution {
        match self.scenario.time_cost_model {
            TimeCostModel::Income => TimeCostDistribution::income_fit(),
            TimeCostModel::Bathtub => TimeCostDistribution::bathtub(),
            TimeCostModel::Fixed => TimeCostDistribution::Degenerate(self.scenario.fixed_time_cost_eur_per_h),
        }
    }

    pub fn fuel_model(&self) -> Result<FuelModelCoefficients> {
        match &self.scenario.fuel_model_file {
            None => Ok(FuelModelCoefficients::default()),
            Some(p) => {
                let path = match &self.base_dir {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p.clone(),
                };
                FuelModelCoefficients::load(path)
            }
        }
    }

    /// World for one cell of the run matrix.
    pub fn world_config(&self, approach: Approach, density: f64, seed: u64) -> Result<WorldConfig> {
        Ok(WorldConfig {
            freeway: self.freeway(),
            trip_length_m: self.scenario.trip_length_m,
            density,
            approach,
            seed,
            time_cost: self.time_cost_distribution(),
            fuel_price_per_liter: self.scenario.fuel_price_eur_per_l,
            dynamics: self.dynamics.clone(),
            formation: self.formation.clone(),
            fuel_model: self.fuel_model()?,
            slipstream: SlipstreamModel::default(),
            prefill: self.scenario.prefill,
            spawning: true,
            record_audit: false,
        })
    }
}
