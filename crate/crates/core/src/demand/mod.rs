//! Demand-growth uncertainty: growth samples from a consumption history, a
//! Gompertz fit by MCMC, Low/Mid/High bucketing, the transition matrix, and
//! trajectory sampling.

mod distribution;
mod markov;
mod mcmc;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use distribution::{bucket_masses, representative_growth, BucketSpec, Gompertz, GrowthDistribution};
pub use markov::{build_transition_matrix, sample_trajectory, GrowthPeriod, GrowthTrajectory, TransitionMatrix};
pub use mcmc::{mcmc_fit, McmcConfig, McmcFit};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthState {
    Low,
    Mid,
    High,
}

impl GrowthState {
    pub const ALL: [GrowthState; 3] = [GrowthState::Low, GrowthState::Mid, GrowthState::High];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Mid => "mid",
            Self::High => "high",
        }
    }
}

impl std::str::FromStr for GrowthState {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(Self::Low),
            "mid" => Ok(Self::Mid),
            "high" => Ok(Self::High),
            other => Err(CoreError::validation(format!("unknown growth state {other:?}"))),
        }
    }
}

/// Year-over-year growth fractions `x[i+1] / x[i] - 1`.
pub fn growth_samples(series: &[f64]) -> Result<Vec<f64>> {
    if series.len() < 2 {
        return Err(CoreError::validation("consumption series needs at least two values"));
    }
    if let Some(bad) = series.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
        return Err(CoreError::validation(format!("consumption value {bad} is not positive")));
    }
    Ok(series.windows(2).map(|w| w[1] / w[0] - 1.0).collect())
}

/// Parses `year,kwh_per_capita` rows, returning values in year order.
pub fn read_consumption_csv(text: &str) -> Result<Vec<(i32, f64)>> {
    #[derive(Deserialize)]
    struct Row {
        year: i32,
        kwh_per_capita: f64,
    }
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<Row>() {
        let r = rec.map_err(|e| CoreError::parse("consumption csv", e))?;
        rows.push((r.year, r.kwh_per_capita));
    }
    rows.sort_by_key(|r| r.0);
    if rows.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(CoreError::parse("consumption csv", "duplicate year"));
    }
    Ok(rows)
}

pub fn load_consumption_csv(path: &Path) -> Result<Vec<(i32, f64)>> {
    read_consumption_csv(&std::fs::read_to_string(path)?)
}

/// Multiplies every hour by `1 + growth`.
pub fn scale_demand(profile: &[f64], growth: f64) -> Result<Vec<f64>> {
    if !(growth > -1.0) {
        return Err(CoreError::validation("growth must exceed -1"));
    }
    Ok(profile.iter().map(|x| x * (1.0 + growth)).collect())
}

/// `(1 + g)^years - 1`.
pub fn compound(g: f64, years: f64) -> f64 {
    (1.0 + g).powf(years) - 1.0
}
