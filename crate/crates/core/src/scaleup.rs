//! City-level totals from representative feeder classes.
//!
//! Each class is a copy of a representative feeder whose base-year peak sits
//! at a given fraction of the trunk rating. A class study grows its demand
//! to the target year and decides between storage deferral and upgrade; the
//! results are scaled by serviced over represented demand.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispatch::{
    optimize_design, upstream_supply, DispatchOptions, HorizonMode, LoadProfile, ResourceSet, StorageParams, SystemDesign,
};
use crate::error::{CoreError, Result};
use crate::mdp::Action;
use crate::network::Network;
use crate::valuation::{annualized_cost, breakeven_storage_cost, option_cost, Breakeven, CostBook};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeederClass {
    pub id: u32,
    pub loading_fraction: f64,
    pub represented_demand_mwh: f64,
    pub serviced_demand_mwh: f64,
    pub serviced_km: f64,
}

impl FeederClass {
    pub fn validate(&self) -> Result<()> {
        if !(0.4..=0.8).contains(&self.loading_fraction) {
            return Err(CoreError::validation(format!(
                "class {}: loading fraction {} outside [0.4, 0.8]",
                self.id, self.loading_fraction
            )));
        }
        if !(self.represented_demand_mwh > 0.0 && self.serviced_demand_mwh >= self.represented_demand_mwh) {
            return Err(CoreError::validation(format!(
                "class {}: need serviced >= represented demand > 0",
                self.id
            )));
        }
        if !(self.serviced_km > 0.0) {
            return Err(CoreError::validation(format!("class {}: serviced km must be positive", self.id)));
        }
        Ok(())
    }

    pub fn demand_ratio(&self) -> f64 {
        self.serviced_demand_mwh / self.represented_demand_mwh
    }
}

/// Row of the class table: shares of a city's demand and circuit length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassShare {
    pub class: u32,
    pub loading_fraction: f64,
    pub demand_share: f64,
    pub km_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityData {
    pub city: String,
    pub serviced_demand_twh: f64,
    pub circuit_km: f64,
}

pub fn read_class_shares(text: &str) -> Result<Vec<ClassShare>> {
    let mut rows = Vec::new();
    for r in csv::Reader::from_reader(text.as_bytes()).deserialize() {
        rows.push(r.map_err(|e| CoreError::parse("class table", e))?);
    }
    validate_shares(&rows)?;
    Ok(rows)
}

pub fn read_cities(text: &str) -> Result<Vec<CityData>> {
    let mut rows: Vec<CityData> = Vec::new();
    for r in csv::Reader::from_reader(text.as_bytes()).deserialize() {
        rows.push(r.map_err(|e| CoreError::parse("city table", e))?);
    }
    if rows.is_empty() {
        return Err(CoreError::validation("city table is empty"));
    }
    for c in &rows {
        if !(c.serviced_demand_twh > 0.0 && c.circuit_km > 0.0) {
            return Err(CoreError::validation(format!("{}: demand and circuit km must be positive", c.city)));
        }
    }
    Ok(rows)
}

fn validate_shares(rows: &[ClassShare]) -> Result<()> {
    if rows.is_empty() {
        return Err(CoreError::validation("class table is empty"));
    }
    for (name, total) in [
        ("demand", rows.iter().map(|r| r.demand_share).sum::<f64>()),
        ("km", rows.iter().map(|r| r.km_share).sum::<f64>()),
    ] {
        if (total - 1.0).abs() > 1e-9 {
            return Err(CoreError::validation(format!("{name} shares sum to {total}")));
        }
    }
    if rows.iter().any(|r| !(r.demand_share > 0.0 && r.km_share > 0.0)) {
        return Err(CoreError::validation("shares must be positive"));
    }
    Ok(())
}

/// The class profile: `base` rescaled so its peak is `loading_fraction` of
/// the feeder rating.
pub fn class_profile(network: &Network, base: &LoadProfile, loading_fraction: f64) -> LoadProfile {
    base.scaled(loading_fraction * network.rated_capacity_mw / base.peak())
}

/// Feeder classes of one city, sharing the class table across cities.
pub fn city_classes(network: &Network, base: &LoadProfile, shares: &[ClassShare], city: &CityData) -> Result<Vec<FeederClass>> {
    validate_shares(shares)?;
    let classes: Vec<FeederClass> = shares
        .iter()
        .map(|s| FeederClass {
            id: s.class,
            loading_fraction: s.loading_fraction,
            represented_demand_mwh: class_profile(network, base, s.loading_fraction).energy_mwh(),
            serviced_demand_mwh: s.demand_share * city.serviced_demand_twh * 1e6,
            serviced_km: s.km_share * city.circuit_km,
        })
        .collect();
    for c in &classes {
        c.validate()?;
    }
    Ok(classes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassStudyConfig {
    /// Years of growth between the class profile and the decision year.
    pub growth_years: u32,
    pub annual_growth: f64,
    pub deferral_years: u32,
    pub horizon_years: u32,
    pub dispatch: DispatchOptions,
    pub ramp_headroom: f64,
    pub overload_tol_mw: f64,
}

impl Default for ClassStudyConfig {
    fn default() -> Self {
        Self {
            growth_years: 10,
            annual_growth: 0.0661,
            deferral_years: 10,
            horizon_years: 30,
            dispatch: DispatchOptions {
                horizon: HorizonMode::RepresentativeWeeks { seasons: 4 },
                ..DispatchOptions::default()
            },
            ramp_headroom: 2.0,
            overload_tol_mw: 1e-6,
        }
    }
}

impl ClassStudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.deferral_years == 0 || self.deferral_years > self.horizon_years {
            return Err(CoreError::validation("deferral must lie in [1, horizon]"));
        }
        if !(self.annual_growth > -1.0) {
            return Err(CoreError::validation("growth must exceed -1"));
        }
        self.dispatch.validate()
    }
}

/// Storage-cost-independent part of a class study.
#[derive(Debug, Clone)]
pub struct ClassPhysics {
    pub class: FeederClass,
    pub profile: LoadProfile,
    pub overloaded: bool,
    pub upgraded_km: f64,
}

/// Feeder-level decision for one class under one cost book.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassOutcome {
    pub class: u32,
    pub action: Action,
    pub storage_feasible: bool,
    pub storage_energy_mwh: f64,
    pub storage_power_mw: f64,
    pub upgraded_km: f64,
    pub aic_storage: f64,
    pub aic_traditional: f64,
    pub option_value: f64,
}

pub struct ClassStudy {
    pub network: Network,
    pub config: ClassStudyConfig,
    pub classes: Vec<ClassPhysics>,
}

impl ClassStudy {
    /// Runs the detection and upgrade solves for every class in parallel.
    pub fn new(network: Network, base: &LoadProfile, classes: Vec<FeederClass>, config: ClassStudyConfig) -> Result<Self> {
        network.validate()?;
        config.validate()?;
        let growth = (1.0 + config.annual_growth).powi(config.growth_years as i32);
        let costs = CostBook::year_2030();
        let physics = classes
            .into_par_iter()
            .map(|class| {
                class.validate()?;
                let profile = class_profile(&network, base, class.loading_fraction).scaled(growth);
                let detect = solve(&network, &profile, &costs, &config, config.dispatch.existing_only())?;
                let overloaded = detect.dispatch.max_lost_load_mw() > config.overload_tol_mw;
                let upgraded_km = if overloaded {
                    let options = DispatchOptions {
                        allow_storage: false,
                        allow_upgrades: true,
                        ..config.dispatch.clone()
                    };
                    solve(&network, &profile, &costs, &config, options)?.upgraded_km()
                } else {
                    0.0
                };
                Ok(ClassPhysics {
                    class,
                    profile,
                    overloaded,
                    upgraded_km,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            network,
            config,
            classes: physics,
        })
    }

    /// Per-class decisions under `costs`, in class order.
    pub fn outcomes(&self, costs: &CostBook) -> Result<Vec<ClassOutcome>> {
        costs.validate()?;
        self.classes.par_iter().map(|c| self.outcome(c, costs)).collect()
    }

    fn outcome(&self, c: &ClassPhysics, costs: &CostBook) -> Result<ClassOutcome> {
        let cfg = &self.config;
        let none = ClassOutcome {
            class: c.class.id,
            action: Action::NoAction,
            storage_feasible: true,
            storage_energy_mwh: 0.0,
            storage_power_mw: 0.0,
            upgraded_km: 0.0,
            aic_storage: 0.0,
            aic_traditional: 0.0,
            option_value: 0.0,
        };
        if !c.overloaded {
            return Ok(none);
        }
        let options = DispatchOptions {
            allow_storage: true,
            allow_upgrades: false,
            ..cfg.dispatch.clone()
        };
        let storage = solve(&self.network, &c.profile, costs, cfg, options)?;
        let feasible = storage.dispatch.max_lost_load_mw() <= cfg.overload_tol_mw;
        let aic_storage = annualized_cost(&storage.quantities(), costs)?.total();
        let aic_traditional = costs.annual_line_cost(c.upgraded_km);
        let value = option_cost(
            aic_traditional,
            aic_storage,
            aic_traditional,
            cfg.deferral_years,
            cfg.horizon_years,
            costs.discount_rate,
        )?
        .option_value;
        let nwa = feasible && value > 0.0;
        Ok(ClassOutcome {
            action: if nwa { Action::StorageNwa } else { Action::TraditionalUpgrade },
            storage_feasible: feasible,
            storage_energy_mwh: if nwa { storage.new_energy_mwh() } else { 0.0 },
            storage_power_mw: if nwa { storage.new_power_mw() } else { 0.0 },
            upgraded_km: c.upgraded_km,
            aic_storage,
            aic_traditional,
            option_value: value,
            ..none
        })
    }

    /// Largest class option value at the given storage costs; storage-
    /// infeasible classes are excluded since they never defer.
    pub fn max_option_value(&self, costs: &CostBook) -> Result<f64> {
        Ok(self
            .outcomes(costs)?
            .iter()
            .filter(|o| o.action != Action::NoAction && o.storage_feasible)
            .map(|o| o.option_value)
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// First cost on the segment from `start` to `end` at which no class
    /// defers with storage.
    pub fn breakeven(&self, costs: &CostBook, start: (f64, f64), end: (f64, f64), tol: f64) -> Result<Breakeven> {
        breakeven_storage_cost(
            |e, p| self.max_option_value(&costs.clone().with_storage_costs(e, p)),
            start,
            end,
            tol,
        )
    }
}

fn solve(network: &Network, profile: &LoadProfile, costs: &CostBook, cfg: &ClassStudyConfig, options: DispatchOptions) -> Result<SystemDesign> {
    let resources = ResourceSet {
        storage: StorageParams::from_costbook(costs),
        upstream: upstream_supply(&profile.total(), cfg.ramp_headroom)?,
    };
    optimize_design(network, &resources, profile, costs, &options)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledClass {
    pub class: u32,
    pub action: Action,
    pub ratio: f64,
    pub storage_energy_mwh: f64,
    pub storage_power_mw: f64,
    pub deferred_km: f64,
    pub aic_storage: f64,
    pub aic_traditional: f64,
}

/// Scales storage and costs by serviced over represented demand. The whole
/// serviced length counts as deferred when the class defers.
pub fn scale_feeder(outcome: &ClassOutcome, class: &FeederClass) -> ScaledClass {
    let ratio = class.demand_ratio();
    let nwa = outcome.action == Action::StorageNwa;
    let overloaded = outcome.action != Action::NoAction;
    ScaledClass {
        class: class.id,
        action: outcome.action,
        ratio,
        storage_energy_mwh: outcome.storage_energy_mwh * ratio,
        storage_power_mw: outcome.storage_power_mw * ratio,
        deferred_km: if nwa { class.serviced_km } else { 0.0 },
        aic_storage: if nwa { outcome.aic_storage * ratio } else { 0.0 },
        aic_traditional: if overloaded { outcome.aic_traditional * ratio } else { 0.0 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityAggregate {
    pub city: String,
    pub storage_gwh: f64,
    pub storage_gw: f64,
    pub deferred_km: f64,
    pub serviced_km: f64,
    pub flexible_budget_usd: f64,
    pub traditional_budget_usd: f64,
    /// `1 - flexible / traditional`; zero when nothing is overloaded.
    pub savings_fraction: f64,
    /// Storage costs more than the upgrades it replaces.
    pub nwa_worse: bool,
    pub classes: Vec<ScaledClass>,
}

/// Sums scaled classes. Deferring classes pay storage for the deferral
/// years and the upgrade for the rest of the horizon; the others pay the
/// upgrade for the whole horizon.
pub fn aggregate_city(
    city: &str,
    outcomes: &[ClassOutcome],
    classes: &[FeederClass],
    deferral_years: u32,
    horizon_years: u32,
) -> Result<CityAggregate> {
    if outcomes.len() != classes.len() {
        return Err(CoreError::Dimension(format!("{} outcomes for {} classes", outcomes.len(), classes.len())));
    }
    if deferral_years == 0 || deferral_years > horizon_years {
        return Err(CoreError::validation(format!(
            "deferral of {deferral_years} years does not fit a {horizon_years}-year horizon"
        )));
    }
    let (p, h) = (deferral_years as f64, horizon_years as f64);
    let mut agg = CityAggregate {
        city: city.to_string(),
        storage_gwh: 0.0,
        storage_gw: 0.0,
        deferred_km: 0.0,
        serviced_km: 0.0,
        flexible_budget_usd: 0.0,
        traditional_budget_usd: 0.0,
        savings_fraction: 0.0,
        nwa_worse: false,
        classes: Vec::with_capacity(classes.len()),
    };
    for (o, c) in outcomes.iter().zip(classes) {
        if o.class != c.id {
            return Err(CoreError::validation(format!("outcome for class {} paired with class {}", o.class, c.id)));
        }
        let s = scale_feeder(o, c);
        agg.storage_gwh += s.storage_energy_mwh / 1000.0;
        agg.storage_gw += s.storage_power_mw / 1000.0;
        agg.deferred_km += s.deferred_km;
        agg.serviced_km += c.serviced_km;
        agg.traditional_budget_usd += s.aic_traditional * h;
        agg.flexible_budget_usd += match s.action {
            Action::StorageNwa => s.aic_storage * p + s.aic_traditional * (h - p),
            _ => s.aic_traditional * h,
        };
        agg.classes.push(s);
    }
    if agg.traditional_budget_usd > 0.0 {
        agg.savings_fraction = 1.0 - agg.flexible_budget_usd / agg.traditional_budget_usd;
        agg.nwa_worse = agg.savings_fraction < 0.0;
    }
    Ok(agg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub variants: Vec<(String, CityAggregate)>,
    /// The first two variants deploy the same nonzero storage, so sizing is
    /// set by the dispatch constraints rather than by cost.
    pub dispatch_binding: bool,
}

pub fn cost_sensitivity(
    study: &ClassStudy,
    city: &str,
    variants: &[(String, CostBook)],
) -> Result<SensitivityReport> {
    let classes: Vec<FeederClass> = study.classes.iter().map(|c| c.class.clone()).collect();
    let cfg = &study.config;
    let variants = variants
        .iter()
        .map(|(name, book)| {
            let outcomes = study.outcomes(book)?;
            Ok((name.clone(), aggregate_city(city, &outcomes, &classes, cfg.deferral_years, cfg.horizon_years)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let dispatch_binding = match variants.as_slice() {
        [(_, a), (_, b), ..] => dispatch_binding(a, b),
        _ => false,
    };
    Ok(SensitivityReport {
        variants,
        dispatch_binding,
    })
}

/// Two cost variants deploy the same nonzero storage.
pub fn dispatch_binding(a: &CityAggregate, b: &CityAggregate) -> bool {
    a.storage_gwh > 0.0 && (a.storage_gwh - b.storage_gwh).abs() <= 1e-9 * a.storage_gwh
}

/// Storage-cost variants spanning a low, mid and high outlook for 2030.
pub fn cost_variants_2030() -> Vec<(String, CostBook)> {
    let mid = CostBook::year_2030();
    vec![
        ("low".into(), mid.clone().with_storage_costs(116.0, 101.0)),
        ("mid".into(), mid.clone()),
        ("high".into(), mid.with_storage_costs(236.0, 205.0)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class(id: u32, ratio: f64, km: f64) -> FeederClass {
        FeederClass {
            id,
            loading_fraction: 0.6,
            represented_demand_mwh: 1000.0,
            serviced_demand_mwh: 1000.0 * ratio,
            serviced_km: km,
        }
    }

    fn outcome(id: u32, action: Action, energy: f64, sto: f64, trad: f64) -> ClassOutcome {
        ClassOutcome {
            class: id,
            action,
            storage_feasible: true,
            storage_energy_mwh: energy,
            storage_power_mw: energy / 4.0,
            upgraded_km: 3.0,
            aic_storage: sto,
            aic_traditional: trad,
            option_value: 0.0,
        }
    }

    #[test]
    fn unit_ratio_is_identity() {
        let o = outcome(1, Action::StorageNwa, 1.52, 10.0, 20.0);
        let s = scale_feeder(&o, &class(1, 1.0, 5.0));
        assert_eq!(s.storage_energy_mwh, 1.52);
        assert_eq!(s.aic_storage, 10.0);
        assert_eq!(s.deferred_km, 5.0);
    }

    #[test]
    fn thousandfold_ratio_gives_gwh() {
        let o = outcome(1, Action::StorageNwa, 1.52, 10.0, 20.0);
        let agg = aggregate_city("x", &[o], &[class(1, 1000.0, 5.0)], 10, 30).unwrap();
        assert!((agg.storage_gwh - 1.52).abs() < 1e-12);
    }

    #[test]
    fn all_traditional_saves_nothing() {
        let os = [outcome(1, Action::TraditionalUpgrade, 0.0, 0.0, 7.0), outcome(2, Action::TraditionalUpgrade, 0.0, 0.0, 3.0)];
        let agg = aggregate_city("x", &os, &[class(1, 2.0, 1.0), class(2, 3.0, 1.0)], 10, 30).unwrap();
        assert_eq!(agg.flexible_budget_usd, agg.traditional_budget_usd);
        assert_eq!(agg.savings_fraction, 0.0);
        assert_eq!(agg.deferred_km, 0.0);
    }

    #[test]
    fn rejects_deferral_beyond_horizon() {
        assert!(aggregate_city("x", &[], &[], 31, 30).is_err());
    }

    #[test]
    fn class_validation() {
        assert!(class(1, 1.0, 1.0).validate().is_ok());
        assert!(class(1, 0.5, 1.0).validate().is_err());
        assert!(class(1, 1.0, 0.0).validate().is_err());
    }
}
