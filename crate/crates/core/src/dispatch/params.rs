use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::network::{BusId, LineId, Network};
use crate::valuation::CostBook;

pub const HOURS_PER_YEAR: usize = 8760;
const WEEK: usize = 168;

/// Timesteps of one dispatch model. Storage and commitment states wrap
/// within each block of `period_len` consecutive steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    /// Hour of the source profile each step samples.
    pub hours: Vec<usize>,
    /// Hours each step represents.
    pub weights: Vec<f64>,
    pub period_len: usize,
}

impl Horizon {
    /// Every hour of the profile, weight 1, one wrapping period.
    pub fn full(n_hours: usize) -> Self {
        Self {
            hours: (0..n_hours).collect(),
            weights: vec![1.0; n_hours],
            period_len: n_hours,
        }
    }

    /// One week per season: the week holding that season's peak, weighted
    /// by the season's share of the profile.
    pub fn representative_weeks(total_load: &[f64], seasons: usize) -> Result<Self> {
        let n_weeks = total_load.len() / WEEK;
        if seasons == 0 || n_weeks < seasons {
            return Err(CoreError::validation(format!(
                "{} hours cannot hold {seasons} representative weeks",
                total_load.len()
            )));
        }
        let mut hours = Vec::with_capacity(seasons * WEEK);
        let mut weights = Vec::with_capacity(seasons * WEEK);
        for s in 0..seasons {
            let w0 = s * n_weeks / seasons;
            let w1 = (s + 1) * n_weeks / seasons;
            let lo = w0 * WEEK;
            // The last season absorbs hours past the final whole week.
            let hi = if s + 1 == seasons { total_load.len() } else { w1 * WEEK };
            let peak_hour = (lo..hi)
                .max_by(|&a, &b| total_load[a].total_cmp(&total_load[b]).then(b.cmp(&a)))
                .expect("season is nonempty");
            let week = (peak_hour / WEEK).min(w1 - 1);
            let weight = (hi - lo) as f64 / WEEK as f64;
            for h in week * WEEK..(week + 1) * WEEK {
                hours.push(h);
                weights.push(weight);
            }
        }
        Ok(Self {
            hours,
            weights,
            period_len: WEEK,
        })
    }

    pub fn from_mode(mode: HorizonMode, total_load: &[f64]) -> Result<Self> {
        match mode {
            HorizonMode::FullYear => Ok(Self::full(total_load.len())),
            HorizonMode::RepresentativeWeeks { seasons } => Self::representative_weeks(total_load, seasons),
        }
    }

    pub fn len(&self) -> usize {
        self.hours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hours.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn hour_of_day(&self, t: usize) -> u32 {
        (self.hours[t] % 24) as u32
    }

    /// Previous step, wrapping to the end of `t`'s period at its first step.
    pub fn prev(&self, t: usize) -> usize {
        if t % self.period_len == 0 {
            t + self.period_len - 1
        } else {
            t - 1
        }
    }

    pub fn validate(&self, profile_hours: usize) -> Result<()> {
        if self.is_empty() || self.period_len == 0 || self.len() % self.period_len != 0 {
            return Err(CoreError::Dimension(format!(
                "{} steps do not divide into periods of {}",
                self.len(),
                self.period_len
            )));
        }
        if self.weights.len() != self.len() || self.weights.iter().any(|&w| !(w > 0.0)) {
            return Err(CoreError::validation("every step needs a positive weight"));
        }
        if let Some(&h) = self.hours.iter().find(|&&h| h >= profile_hours) {
            return Err(CoreError::Dimension(format!("step samples hour {h} of a {profile_hours}-hour profile")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HorizonMode {
    FullYear,
    RepresentativeWeeks { seasons: usize },
}

impl Default for HorizonMode {
    fn default() -> Self {
        Self::FullYear
    }
}

/// Hourly MW demand per load bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    pub buses: Vec<BusId>,
    /// `series[k][h]` is the demand of `buses[k]` at hour `h`.
    pub series: Vec<Vec<f64>>,
}

impl LoadProfile {
    pub fn n_hours(&self) -> usize {
        self.series.first().map_or(0, Vec::len)
    }

    pub fn bus_series(&self, bus: BusId) -> Option<&[f64]> {
        self.buses.iter().position(|&b| b == bus).map(|k| self.series[k].as_slice())
    }

    pub fn total(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_hours()];
        for s in &self.series {
            for (o, v) in out.iter_mut().zip(s) {
                *o += v;
            }
        }
        out
    }

    pub fn peak(&self) -> f64 {
        self.total().into_iter().fold(0.0, f64::max)
    }

    pub fn energy_mwh(&self) -> f64 {
        self.total().iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            buses: self.buses.clone(),
            series: self.series.iter().map(|s| s.iter().map(|v| v * factor).collect()).collect(),
        }
    }

    pub fn validate(&self, network: &Network) -> Result<()> {
        if self.buses.is_empty() || self.series.len() != self.buses.len() {
            return Err(CoreError::Dimension("profile needs one series per listed bus".into()));
        }
        let n = self.n_hours();
        if n == 0 || self.series.iter().any(|s| s.len() != n) {
            return Err(CoreError::Dimension("profile series must share a nonzero length".into()));
        }
        for &b in &self.buses {
            let bus = network
                .bus_index(b)
                .map(|i| &network.buses[i])
                .ok_or_else(|| CoreError::validation(format!("profile references unknown bus {b}")))?;
            if !bus.carries_load() {
                return Err(CoreError::validation(format!("profile assigns demand to non-load bus {b}")));
            }
        }
        if self.series.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(CoreError::validation("demand must be finite and nonnegative"));
        }
        Ok(())
    }

    /// Columns `hour`, then `bus_<id>_mw` per bus.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| CoreError::parse("demand csv", e))?.clone();
        if headers.get(0) != Some("hour") {
            return Err(CoreError::parse("demand csv", "first column must be `hour`"));
        }
        let buses = headers
            .iter()
            .skip(1)
            .map(|h| {
                h.strip_prefix("bus_")
                    .and_then(|s| s.strip_suffix("_mw"))
                    .and_then(|s| s.parse::<BusId>().ok())
                    .ok_or_else(|| CoreError::parse("demand csv", format!("bad column {h:?}; expected bus_<id>_mw")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut series = vec![Vec::new(); buses.len()];
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| CoreError::parse("demand csv", e))?;
            let hour: usize = rec[0].trim().parse().map_err(|e| CoreError::parse("demand csv", e))?;
            if hour != i {
                return Err(CoreError::parse("demand csv", format!("row {i} has hour {hour}")));
            }
            for (k, s) in series.iter_mut().enumerate() {
                let v: f64 = rec
                    .get(k + 1)
                    .ok_or_else(|| CoreError::parse("demand csv", format!("row {i} is short")))?
                    .trim()
                    .parse()
                    .map_err(|e| CoreError::parse("demand csv", e))?;
                s.push(v);
            }
        }
        Ok(Self { buses, series })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["hour".to_string()];
        header.extend(self.buses.iter().map(|b| format!("bus_{b}_mw")));
        w.write_record(&header).expect("in-memory write");
        for h in 0..self.n_hours() {
            let mut row = vec![h.to_string()];
            row.extend(self.series.iter().map(|s| format!("{}", s[h])));
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

/// Battery technology parameters. Costs are annualized, per MW or MWh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageParams {
    pub eta_charge: f64,
    pub eta_discharge: f64,
    pub depth_of_discharge: f64,
    /// `C^e`, USD/MWh-yr.
    pub energy_cost: f64,
    /// `C^Fe`, USD/MWh-yr.
    pub energy_fixed_cost: f64,
    /// `C^c`, USD/MW-yr.
    pub power_cost: f64,
    /// `C^Fc`, USD/MW-yr.
    pub power_fixed_cost: f64,
    /// `C^d`, premium on energy costs.
    pub degradation: f64,
    /// `C^Ve + C^Vc`, USD/MWh charged.
    pub variable_cost: f64,
}

impl StorageParams {
    pub fn from_costbook(book: &CostBook) -> Self {
        let crf = book.storage_crf();
        Self {
            eta_charge: 0.95,
            eta_discharge: 0.95,
            depth_of_discharge: 1.0,
            energy_cost: book.energy_usd_per_kwh * 1000.0 * crf,
            energy_fixed_cost: 0.0,
            power_cost: book.power_usd_per_kw * 1000.0 * crf,
            power_fixed_cost: book.om_usd_per_kw_yr * 1000.0,
            degradation: book.degradation,
            variable_cost: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta_charge", self.eta_charge),
            ("eta_discharge", self.eta_discharge),
            ("depth_of_discharge", self.depth_of_discharge),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(CoreError::validation(format!("{name} must lie in (0, 1]")));
            }
        }
        for (name, v) in [
            ("energy_cost", self.energy_cost),
            ("energy_fixed_cost", self.energy_fixed_cost),
            ("power_cost", self.power_cost),
            ("power_fixed_cost", self.power_fixed_cost),
            ("degradation", self.degradation),
            ("variable_cost", self.variable_cost),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CoreError::validation(format!("storage {name} must be nonnegative")));
            }
        }
        Ok(())
    }
}

/// Aggregate upstream supply at the substation, modeled as an existing
/// dispatchable resource with relaxed commitment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpstreamSupply {
    /// `Omega^size`, MW.
    pub capacity_mw: f64,
    /// `Omega^unit`, MW.
    pub unit_mw: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    /// Ramp limits as fractions of capacity per step.
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub startup_cost: f64,
}

impl UpstreamSupply {
    pub fn validate(&self) -> Result<()> {
        if !(self.capacity_mw > 0.0 && self.unit_mw > 0.0 && self.unit_mw <= self.capacity_mw) {
            return Err(CoreError::validation("upstream capacity and unit size must be positive, unit <= capacity"));
        }
        if !(0.0 <= self.rho_min && self.rho_min <= self.rho_max && self.rho_max <= 1.0) {
            return Err(CoreError::validation("upstream needs 0 <= rho_min <= rho_max <= 1"));
        }
        if !(self.ramp_up > 0.0 && self.ramp_down > 0.0 && self.startup_cost >= 0.0) {
            return Err(CoreError::validation("upstream ramps must be positive and startup cost nonnegative"));
        }
        Ok(())
    }
}

/// Upstream supply sized from the demand it serves: capacity twice the
/// peak, minimum output at the minimum demand, ramps at `headroom` times
/// the largest hourly load step.
pub fn upstream_supply(total_load: &[f64], headroom: f64) -> Result<UpstreamSupply> {
    let peak = total_load.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(CoreError::validation("demand has no positive hour"));
    }
    if !(headroom >= 1.0) {
        return Err(CoreError::validation("ramp headroom must be at least 1"));
    }
    let min = total_load.iter().copied().fold(f64::INFINITY, f64::min);
    let capacity = 2.0 * peak;
    let step = total_load
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .chain(std::iter::once((total_load[0] - total_load[total_load.len() - 1]).abs()))
        .fold(0.0, f64::max);
    let ramp = ((headroom * step) / capacity).clamp(1e-3, 1.0);
    Ok(UpstreamSupply {
        capacity_mw: capacity,
        unit_mw: capacity,
        rho_min: (min.max(0.0) / capacity).min(1.0),
        rho_max: 1.0,
        ramp_up: ramp,
        ramp_down: ramp,
        startup_cost: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceSet {
    pub storage: StorageParams,
    pub upstream: UpstreamSupply,
}

/// Installed storage at a bus; its capital cost is sunk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageUnit {
    pub bus: BusId,
    pub power_mw: f64,
    pub energy_mwh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    /// Dense Bland simplex.
    Reference,
    Highs,
    /// Reference up to `AUTO_REFERENCE_ROWS` rows, HiGHS beyond.
    Auto,
}

pub const AUTO_REFERENCE_ROWS: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DispatchOptions {
    /// Storage only at `storage_allowed` buses and no export upstream.
    pub india_mode: bool,
    /// Lets storage sit at any non-substation bus even in India mode.
    pub relax_storage_sites: bool,
    pub allow_storage: bool,
    pub allow_upgrades: bool,
    pub voll_usd_per_mwh: f64,
    pub theta_max_rad: f64,
    pub existing_storage: Vec<StorageUnit>,
    /// Replaces `capacity_mw` of listed lines, e.g. after reconductoring.
    pub line_capacity_mw: BTreeMap<LineId, f64>,
    pub horizon: HorizonMode,
    pub solver: SolverChoice,
}

impl Default for DispatchOptions {
    fn default() -> Self {
        Self {
            india_mode: true,
            relax_storage_sites: false,
            allow_storage: true,
            allow_upgrades: true,
            voll_usd_per_mwh: 10_000.0,
            theta_max_rad: 0.6,
            existing_storage: Vec::new(),
            line_capacity_mw: BTreeMap::new(),
            horizon: HorizonMode::FullYear,
            solver: SolverChoice::Auto,
        }
    }
}

impl DispatchOptions {
    /// Existing assets only: no storage or line investment.
    pub fn existing_only(&self) -> Self {
        Self {
            allow_storage: false,
            allow_upgrades: false,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.voll_usd_per_mwh > 0.0) {
            return Err(CoreError::validation("value of lost load must be positive"));
        }
        if !(self.theta_max_rad > 0.0 && self.theta_max_rad.is_finite()) {
            return Err(CoreError::validation("angle bound must be positive and finite"));
        }
        for u in &self.existing_storage {
            if !(u.power_mw >= 0.0 && u.energy_mwh >= 0.0) {
                return Err(CoreError::validation("existing storage sizes must be nonnegative"));
            }
        }
        if self.line_capacity_mw.values().any(|&c| !(c > 0.0)) {
            return Err(CoreError::validation("line capacity overrides must be positive"));
        }
        Ok(())
    }
}
