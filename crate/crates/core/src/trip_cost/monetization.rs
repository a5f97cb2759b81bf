//! Value-of-time distributions and the mapping from time cost to desired speed.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::error::{Error, Result};

use super::MAX_TIME_COST_PER_HOUR;

pub const MIN_DESIRED_SPEED: f64 = 22.0;
pub const MAX_DESIRED_SPEED: f64 = 55.0;

/// Working hours per month used to turn a monthly income into an hourly value.
pub const HOURS_PER_MONTH: f64 = 160.0;

/// Linear map of `[0, 75]` EUR/h onto `[22, 55]` m/s.
pub fn desired_speed_from_time_cost(c_time: f64) -> Result<f64> {
    if !(0.0..=MAX_TIME_COST_PER_HOUR).contains(&c_time) {
        return Err(Error::Domain(format!("time cost {c_time} outside [0, {MAX_TIME_COST_PER_HOUR}]")));
    }
    Ok((MAX_DESIRED_SPEED - MIN_DESIRED_SPEED) / MAX_TIME_COST_PER_HOUR * c_time + MIN_DESIRED_SPEED)
}

/// Distribution of drivers' hourly time cost.
#[derive(Debug, Clone)]
pub enum TimeCostDistribution {
    /// Generalized hyperbolic fit of monthly gross income.
    IncomeHyperbolic(GeneralizedHyperbolic),
    /// Beta distributed monthly income with mass at both ends.
    Bathtub { alpha: f64, beta: f64, income_min: f64, income_range: f64 },
    /// Every driver has the same value.
    Degenerate(f64),
}

impl TimeCostDistribution {
    /// Fit of German full-time monthly gross income, April 2023.
    pub fn income_fit() -> Self {
        Self::IncomeHyperbolic(
            GeneralizedHyperbolic::new(1.23, 0.62, 0.39, 2498.26, 363.96).expect("fit parameters are valid"),
        )
    }

    pub fn bathtub() -> Self {
        Self::Bathtub { alpha: 0.2, beta: 0.2, income_min: 0.0, income_range: 12_100.0 }
    }

    /// Draws one hourly time cost in `[0, 75]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::IncomeHyperbolic(gh) => monthly_to_hourly(gh.sample(rng)),
            Self::Bathtub { alpha, beta, income_min, income_range } => {
                let b = Beta::new(*alpha, *beta).expect("validated shape parameters");
                let x: f64 = b.sample(rng);
                monthly_to_hourly(income_min + income_range * x)
            }
            Self::Degenerate(v) => v.clamp(0.0, MAX_TIME_COST_PER_HOUR),
        }
    }
}

/// Hourly value of a monthly income, capped at 75 EUR/h (12 000 EUR/month).
pub fn monthly_to_hourly(monthly: f64) -> f64 {
    (monthly / HOURS_PER_MONTH).clamp(0.0, MAX_TIME_COST_PER_HOUR)
}

/// Generalized hyperbolic distribution in the `(p, a, b, loc, scale)`
/// parametrization with unit `delta`.
///
/// Sampled as a normal variance-mean mixture over a generalized inverse
/// Gaussian mixing variable.
#[derive(Debug, Clone)]
pub struct GeneralizedHyperbolic {
    b: f64,
    loc: f64,
    scale: f64,
    gig_scale: f64,
    gig: GigSampler,
}

impl GeneralizedHyperbolic {
    pub fn new(p: f64, a: f64, b: f64, loc: f64, scale: f64) -> Result<Self> {
        if !(a > 0.0 && b.abs() < a && scale > 0.0 && p.is_finite() && loc.is_finite()) {
            return Err(Error::Domain(format!("invalid generalized hyperbolic parameters p={p} a={a} b={b}")));
        }
        let omega = (a * a - b * b).sqrt();
        Ok(Self { b, loc, scale, gig_scale: 1.0 / omega, gig: GigSampler::new(p, omega)? })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let w = self.gig_scale * self.gig.sample(rng);
        let z: f64 = rng.sample(StandardNormal);
        self.loc + self.scale * (self.b * w + w.sqrt() * z)
    }
}

/// Ratio-of-uniforms sampler with mode shift for the generalized inverse
/// Gaussian quasi-density `x^(p-1) exp(-omega/2 (x + 1/x))`.
#[derive(Debug, Clone)]
struct GigSampler {
    p: f64,
    omega: f64,
    mode: f64,
    log_peak: f64,
    u_min: f64,
    u_max: f64,
}

impl GigSampler {
    fn new(p: f64, omega: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::Domain("GIG concentration must be positive".into()));
        }
        let mode = if p >= 1.0 {
            ((p - 1.0) + ((p - 1.0).powi(2) + omega * omega).sqrt()) / omega
        } else {
            omega / ((1.0 - p) + ((1.0 - p).powi(2) + omega * omega).sqrt())
        };
        let mut s = Self { p, omega, mode, log_peak: 0.0, u_min: 0.0, u_max: 0.0 };
        s.log_peak = s.log_density(mode);
        // Work relative to the peak so the bounding box stays well scaled.
        let probe = s.clone();
        let h = |x: f64| (x - mode) * (0.5 * (probe.log_density(x) - probe.log_peak)).exp();
        s.u_min = golden_section_min(&h, 0.0, mode);
        let mut hi = mode + 1.0;
        while h(2.0 * hi - mode) > h(hi) {
            hi = 2.0 * hi - mode;
        }
        s.u_max = -golden_section_min(&|x| -h(x), mode, 2.0 * hi - mode);
        Ok(s)
    }

    fn log_density(&self, x: f64) -> f64 {
        (self.p - 1.0) * x.ln() - 0.5 * self.omega * (x + 1.0 / x)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let u = self.u_min + (self.u_max - self.u_min) * rng.random::<f64>();
            let v: f64 = 1.0 - rng.random::<f64>();
            let x = u / v + self.mode;
            if x > 0.0 && 2.0 * v.ln() <= self.log_density(x) - self.log_peak {
                return x;
            }
        }
    }
}

/// Minimum value of a unimodal function on `[lo, hi]`.
fn golden_section_min(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    // Pad slightly: an inexact bound that is too tight would bias the sampler.
    f1.min(f2) * (1.0 + 1e-9)
}
