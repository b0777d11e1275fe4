use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gridnwa_core::demand::{BucketSpec, GrowthState, McmcConfig, TransitionMatrix};
use gridnwa_core::dispatch::{HorizonMode, LoadProfile};
use gridnwa_core::network::{load_network, Network};
use gridnwa_core::sample::{sample_feeder, sample_profile};
use gridnwa_core::valuation::CostBook;
use serde::{Deserialize, Serialize};

/// One run's configuration. Relative paths resolve against the config
/// file's directory.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub paths: Paths,
    pub study: StudySection,
    pub growth: GrowthSection,
    pub costs: CostBook,
    pub mcmc: McmcConfig,
    pub value: ValueSection,
    pub scale: ScaleSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Network JSON; the bundled sample feeder when absent.
    pub network: Option<PathBuf>,
    /// Hourly demand CSV; the bundled sample profile when absent.
    pub demand: Option<PathBuf>,
    /// `year,kwh_per_capita` history for `fit` and `matrix`.
    pub consumption: Option<PathBuf>,
    pub classes: Option<PathBuf>,
    pub cities: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    FullYear,
    RepresentativeWeeks,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    pub start_year: i32,
    /// Decision year for `optimize`, `value` and `report`.
    pub year: i32,
    pub state: GrowthState,
    pub india_mode: bool,
    pub resolution: Resolution,
    pub seasons: usize,
    pub period_years: u32,
    pub horizon_years: u32,
    pub trajectories: usize,
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            start_year: 2020,
            year: 2030,
            state: GrowthState::Mid,
            india_mode: true,
            resolution: Resolution::RepresentativeWeeks,
            seasons: 4,
            period_years: 5,
            horizon_years: 25,
            trajectories: 100,
        }
    }
}

impl StudySection {
    pub fn horizon_mode(&self) -> HorizonMode {
        match self.resolution {
            Resolution::FullYear => HorizonMode::FullYear,
            Resolution::RepresentativeWeeks => HorizonMode::RepresentativeWeeks { seasons: self.seasons },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthSection {
    /// Annual growth realized in the low, mid and high states.
    pub rates: [f64; 3],
    pub matrix: Option<[[f64; 3]; 3]>,
    pub buckets: BucketSpec,
}

impl Default for GrowthSection {
    fn default() -> Self {
        Self {
            rates: [0.0307, 0.0661, 0.0989],
            matrix: None,
            buckets: BucketSpec::default(),
        }
    }
}

impl GrowthSection {
    pub fn transition_matrix(&self) -> Result<TransitionMatrix> {
        match self.matrix {
            Some(p) => Ok(TransitionMatrix::new(p)?),
            None => Ok(TransitionMatrix::delhi_default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub aic_traditional: f64,
    pub aic_storage: f64,
    /// Defaults to the traditional AIC.
    pub aic_deferred: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValueSection {
    /// Explicit AIC inputs; when empty, scenarios are derived from feeder
    /// solves for each growth state.
    pub scenarios: Vec<Scenario>,
    /// Transition row weighting the scenarios into an expected value.
    pub row: Option<Vec<f64>>,
    pub deferral_years: u32,
    pub horizon_years: u32,
}

impl Default for ValueSection {
    fn default() -> Self {
        Self {
            scenarios: Vec::new(),
            row: None,
            deferral_years: 5,
            horizon_years: 30,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleSection {
    pub deferral_years: u32,
    pub horizon_years: u32,
    /// Storage cost variants as `(name, USD/kWh, USD/kW)`.
    pub variants: Vec<(String, f64, f64)>,
    /// Breakeven search segment in `(USD/kWh, USD/kW)`.
    pub ray_start: (f64, f64),
    pub ray_end: (f64, f64),
}

impl Default for ScaleSection {
    fn default() -> Self {
        Self {
            deferral_years: 10,
            horizon_years: 30,
            variants: vec![
                ("low".into(), 116.0, 101.0),
                ("mid".into(), 168.0, 146.0),
                ("high".into(), 236.0, 205.0),
            ],
            ray_start: (116.0, 101.0),
            ray_end: (13_050.0, 11_350.0),
        }
    }
}

/// Parsed configuration plus the raw text it came from.
pub struct LoadedConfig {
    pub config: RunConfig,
    pub text: String,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let loaded = Self { config, text, base_dir };
        loaded.validate()?;
        Ok(loaded)
    }

    fn validate(&self) -> Result<()> {
        let c = &self.config;
        let p = &c.paths;
        for path in [&p.network, &p.demand, &p.consumption, &p.classes, &p.cities].into_iter().flatten() {
            let full = self.resolve(path);
            if !full.is_file() {
                bail!(validation(format!("referenced file {} does not exist", full.display())));
            }
        }
        if c.study.year < c.study.start_year {
            bail!(validation("study year precedes the start year"));
        }
        if c.study.trajectories == 0 {
            bail!(validation("at least one trajectory is required"));
        }
        c.costs.validate()?;
        self.config.growth.transition_matrix()?;
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn required(&self, path: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
        match path {
            Some(p) => Ok(self.resolve(p)),
            None => bail!(validation(format!("paths.{what} is required for this command"))),
        }
    }

    pub fn network(&self) -> Result<Network> {
        match &self.config.paths.network {
            Some(p) => Ok(load_network(&self.resolve(p))?),
            None => Ok(sample_feeder()),
        }
    }

    pub fn demand(&self, network: &Network) -> Result<LoadProfile> {
        let profile = match &self.config.paths.demand {
            Some(p) => LoadProfile::from_csv(&std::fs::read_to_string(self.resolve(p))?)?,
            None => sample_profile(),
        };
        profile.validate(network)?;
        Ok(profile)
    }
}

pub fn validation(msg: impl Into<String>) -> gridnwa_core::CoreError {
    gridnwa_core::CoreError::validation(msg)
}
