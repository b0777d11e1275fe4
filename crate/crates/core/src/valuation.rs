//! Cost annualization, the deferral option value, its expectation over
//! growth successors, breakeven storage costs and capital utilization.
//!
//! Sign convention: `option_value = traditional path - NWA path`, so a
//! positive value means storage plus deferral is the cheaper plan.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// `true`: a positive option value marks the NWA as feasible.
pub const POSITIVE_OPTION_IS_FEASIBLE: bool = true;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostBook {
    pub energy_usd_per_kwh: f64,
    pub power_usd_per_kw: f64,
    pub om_usd_per_kw_yr: f64,
    pub new_line_usd_per_km: f64,
    pub reconductoring_usd_per_km: f64,
    pub offpeak_tariff_usd_per_mwh: f64,
    pub peak_tariff_usd_per_mwh: f64,
    /// Peak tariff applies for hours of day in `[peak_start_hour, peak_end_hour)`.
    pub peak_start_hour: u32,
    pub peak_end_hour: u32,
    pub discount_rate: f64,
    pub line_life_years: u32,
    pub storage_life_years: u32,
    /// Annual energy-capex premium for battery degradation.
    pub degradation: f64,
}

impl Default for CostBook {
    fn default() -> Self {
        Self::year_2030()
    }
}

impl CostBook {
    pub fn year_2030() -> Self {
        Self {
            energy_usd_per_kwh: 168.0,
            power_usd_per_kw: 146.0,
            om_usd_per_kw_yr: 20.0,
            new_line_usd_per_km: 350_000.0,
            reconductoring_usd_per_km: 650_000.0,
            offpeak_tariff_usd_per_mwh: 55.0,
            peak_tariff_usd_per_mwh: 90.0,
            peak_start_hour: 20,
            peak_end_hour: 24,
            discount_rate: 0.09,
            line_life_years: 30,
            storage_life_years: 15,
            degradation: 0.0146,
        }
    }

    pub fn year_2040() -> Self {
        Self {
            energy_usd_per_kwh: 147.0,
            power_usd_per_kw: 128.0,
            om_usd_per_kw_yr: 18.0,
            ..Self::year_2030()
        }
    }

    pub fn for_year(year: i32) -> Result<Self> {
        match year {
            2030 => Ok(Self::year_2030()),
            2040 => Ok(Self::year_2040()),
            y => Err(CoreError::validation(format!("no default cost book for {y}; use 2030 or 2040"))),
        }
    }

    pub fn with_storage_costs(self, energy_usd_per_kwh: f64, power_usd_per_kw: f64) -> Self {
        Self {
            energy_usd_per_kwh,
            power_usd_per_kw,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("energy_usd_per_kwh", self.energy_usd_per_kwh),
            ("power_usd_per_kw", self.power_usd_per_kw),
            ("om_usd_per_kw_yr", self.om_usd_per_kw_yr),
            ("new_line_usd_per_km", self.new_line_usd_per_km),
            ("reconductoring_usd_per_km", self.reconductoring_usd_per_km),
            ("offpeak_tariff_usd_per_mwh", self.offpeak_tariff_usd_per_mwh),
            ("peak_tariff_usd_per_mwh", self.peak_tariff_usd_per_mwh),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CoreError::validation(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.discount_rate > 0.0 && self.discount_rate < 1.0) {
            return Err(CoreError::validation("discount_rate must lie in (0, 1)"));
        }
        if self.line_life_years == 0 || self.storage_life_years == 0 {
            return Err(CoreError::validation("asset lifetimes must be at least one year"));
        }
        if !(self.degradation >= 0.0 && self.degradation.is_finite()) {
            return Err(CoreError::validation("degradation must be nonnegative"));
        }
        if self.peak_start_hour >= self.peak_end_hour || self.peak_end_hour > 24 {
            return Err(CoreError::validation("peak hours must satisfy start < end <= 24"));
        }
        Ok(())
    }

    pub fn is_peak_hour(&self, hour_of_day: u32) -> bool {
        (self.peak_start_hour..self.peak_end_hour).contains(&(hour_of_day % 24))
    }

    /// Energy price in USD/MWh at a given hour of the day.
    pub fn tariff(&self, hour_of_day: u32) -> f64 {
        if self.is_peak_hour(hour_of_day) {
            self.peak_tariff_usd_per_mwh
        } else {
            self.offpeak_tariff_usd_per_mwh
        }
    }

    pub fn storage_crf(&self) -> f64 {
        crf(self.discount_rate, self.storage_life_years)
    }

    pub fn line_crf(&self) -> f64 {
        crf(self.discount_rate, self.line_life_years)
    }

    /// Annualized storage energy cost in USD/MWh-yr, degradation premium included.
    pub fn annual_energy_cost_per_mwh(&self) -> f64 {
        self.energy_usd_per_kwh * 1000.0 * (1.0 + self.degradation) * self.storage_crf()
    }

    /// Annualized storage power cost in USD/MW-yr.
    pub fn annual_power_cost_per_mw(&self) -> f64 {
        self.power_usd_per_kw * 1000.0 * self.storage_crf()
    }

    /// Fixed O&M in USD/MW-yr.
    pub fn annual_om_per_mw(&self) -> f64 {
        self.om_usd_per_kw_yr * 1000.0
    }

    /// Annualized reconductoring cost of `km` of line, USD/yr.
    pub fn annual_line_cost(&self, km: f64) -> f64 {
        km * self.reconductoring_usd_per_km * self.line_crf()
    }
}

/// Capital recovery factor `r / (1 - (1 + r)^-n)`; `1 / n` at `r = 0`.
pub fn crf(rate: f64, life_years: u32) -> f64 {
    debug_assert!(life_years >= 1 && rate >= 0.0);
    let n = f64::from(life_years);
    if rate == 0.0 {
        1.0 / n
    } else {
        rate / (1.0 - (1.0 + rate).powf(-n))
    }
}

/// Present value at year 0 of 1 USD paid at the end of each year in `(from, to]`.
pub fn annuity_factor(rate: f64, from: u32, to: u32) -> f64 {
    (from + 1..=to).map(|t| (1.0 + rate).powi(-(t as i32))).sum()
}

/// Physical quantities an AIC is computed from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AssetQuantities {
    pub storage_energy_kwh: f64,
    pub storage_power_kw: f64,
    pub upgraded_km: f64,
    /// Annual storage charging cost at the tariff schedule, USD/yr.
    pub charging_cost_usd: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AicBreakdown {
    pub energy_capex: f64,
    pub power_capex: f64,
    pub fixed_om: f64,
    pub line_capex: f64,
    pub variable: f64,
}

impl AicBreakdown {
    pub fn storage_capex(&self) -> f64 {
        self.energy_capex + self.power_capex
    }

    pub fn storage_total(&self) -> f64 {
        self.storage_capex() + self.fixed_om + self.variable
    }

    pub fn total(&self) -> f64 {
        self.storage_total() + self.line_capex
    }
}

/// Itemized annualized investment cost, USD/yr.
pub fn annualized_cost(q: &AssetQuantities, book: &CostBook) -> Result<AicBreakdown> {
    book.validate()?;
    for (name, v) in [
        ("storage energy", q.storage_energy_kwh),
        ("storage power", q.storage_power_kw),
        ("upgraded km", q.upgraded_km),
        ("charging cost", q.charging_cost_usd),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(CoreError::validation(format!("{name} must be finite and nonnegative, got {v}")));
        }
    }
    let s = book.storage_crf();
    Ok(AicBreakdown {
        energy_capex: q.storage_energy_kwh * book.energy_usd_per_kwh * (1.0 + book.degradation) * s,
        power_capex: q.storage_power_kw * book.power_usd_per_kw * s,
        fixed_om: q.storage_power_kw * book.om_usd_per_kw_yr,
        line_capex: book.annual_line_cost(q.upgraded_km),
        variable: q.charging_cost_usd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionValuation {
    pub aic_traditional: f64,
    pub aic_storage: f64,
    pub aic_deferred: f64,
    pub deferral_years: u32,
    pub horizon_years: u32,
    /// Present value of the traditional path, USD.
    pub pv_traditional: f64,
    /// Present value of storage over the deferral then the deferred upgrade, USD.
    pub pv_nwa: f64,
    /// `pv_traditional - pv_nwa` re-annualized over the horizon, USD/yr.
    pub option_value: f64,
}

impl OptionValuation {
    pub fn nwa_feasible(&self) -> bool {
        if POSITIVE_OPTION_IS_FEASIBLE {
            self.option_value > 0.0
        } else {
            self.option_value < 0.0
        }
    }
}

/// Option value of storing for `p` years before the deferred upgrade, over
/// `horizon` years with end-of-year discounting at `rate`.
pub fn option_cost(
    aic_traditional: f64,
    aic_storage: f64,
    aic_deferred: f64,
    p: u32,
    horizon: u32,
    rate: f64,
) -> Result<OptionValuation> {
    if p == 0 {
        return Err(CoreError::validation("deferral period must be at least one year"));
    }
    if p > horizon {
        return Err(CoreError::validation(format!("deferral {p} exceeds horizon {horizon}")));
    }
    if !(rate >= 0.0 && rate < 1.0) {
        return Err(CoreError::validation("discount rate must lie in [0, 1)"));
    }
    for (name, v) in [("traditional", aic_traditional), ("storage", aic_storage), ("deferred", aic_deferred)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(CoreError::validation(format!("{name} AIC must be finite and nonnegative, got {v}")));
        }
    }
    let pv_traditional = aic_traditional * annuity_factor(rate, 0, horizon);
    let pv_nwa = aic_storage * annuity_factor(rate, 0, p) + aic_deferred * annuity_factor(rate, p, horizon);
    Ok(OptionValuation {
        aic_traditional,
        aic_storage,
        aic_deferred,
        deferral_years: p,
        horizon_years: horizon,
        pv_traditional,
        pv_nwa,
        option_value: (pv_traditional - pv_nwa) * crf(rate, horizon),
    })
}

/// `sum_s' P(s, s') * O(s')`.
pub fn expected_option_value(row: &[f64], option_costs: &[f64]) -> Result<f64> {
    if row.len() != option_costs.len() {
        return Err(CoreError::Dimension(format!(
            "{} transition probabilities for {} option costs",
            row.len(),
            option_costs.len()
        )));
    }
    if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(CoreError::validation("transition row must be a probability vector"));
    }
    Ok(row.iter().zip(option_costs).map(|(p, o)| p * o).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakeven {
    pub energy_usd_per_kwh: f64,
    pub power_usd_per_kw: f64,
    /// Option value at the returned point; never positive.
    pub option_value: f64,
    /// Position along the ray, 0 at `start` and 1 at `end`.
    pub t: f64,
    pub evaluations: usize,
}

/// Bisects along the segment from `start` to `end` (energy USD/kWh, power
/// USD/kW) for the first cost where `value` stops being positive.
///
/// Requires `value(start) > 0 >= value(end)`. Returns the bracket end on the
/// infeasible side once it is within `tol` USD/yr of zero.
pub fn breakeven_storage_cost<F>(mut value: F, start: (f64, f64), end: (f64, f64), tol: f64) -> Result<Breakeven>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let at = |t: f64| (start.0 + t * (end.0 - start.0), start.1 + t * (end.1 - start.1));
    let f0 = value(start.0, start.1)?;
    let f1 = value(end.0, end.1)?;
    if !(f0 > 0.0 && f1 <= 0.0) {
        return Err(CoreError::NoSignChange { low: f0, high: f1 });
    }
    let (mut lo, mut hi, mut f_hi) = (0.0_f64, 1.0_f64, f1);
    let mut evaluations = 2;
    while f_hi.abs() > tol && hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let (e, p) = at(mid);
        let f = value(e, p)?;
        evaluations += 1;
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
            f_hi = f;
        }
    }
    let (e, p) = at(hi);
    Ok(Breakeven {
        energy_usd_per_kwh: e,
        power_usd_per_kw: p,
        option_value: f_hi,
        t: hi,
        evaluations,
    })
}

/// Mean of `W / M` over periods.
pub fn capital_utilization_rate(loading_mw: &[f64], capacity_mw: f64) -> Result<f64> {
    capital_utilization_rate_varying(loading_mw, &vec![capacity_mw; loading_mw.len()])
}

/// Mean of `W_t / M_t` with a per-period capacity.
pub fn capital_utilization_rate_varying(loading_mw: &[f64], capacity_mw: &[f64]) -> Result<f64> {
    if loading_mw.is_empty() {
        return Err(CoreError::validation("no periods to average"));
    }
    if loading_mw.len() != capacity_mw.len() {
        return Err(CoreError::Dimension("loading and capacity series differ in length".into()));
    }
    if capacity_mw.iter().any(|&m| !(m > 0.0)) {
        return Err(CoreError::validation("capacity must be positive"));
    }
    Ok(loading_mw.iter().zip(capacity_mw).map(|(w, m)| w / m).sum::<f64>() / loading_mw.len() as f64)
}
