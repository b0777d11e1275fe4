//! Staged storage-versus-upgrade planning along sampled growth paths.
//!
//! Each stage scales the base profile by the realized growth, checks for
//! overload with existing assets, and on overload compares the storage
//! deferral option against reconductoring for every successor growth
//! state. A traditional upgrade ends the trajectory.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::solver::{period_discount, stage_value};
use crate::demand::{sample_trajectory, GrowthState, GrowthTrajectory, TransitionMatrix};
use crate::dispatch::{
    optimize_design, upstream_supply, DispatchOptions, HorizonMode, LoadProfile, ResourceSet, StorageParams, StorageUnit,
    SystemDesign,
};
use crate::error::{CoreError, Result};
use crate::network::{LineId, Network};
use crate::valuation::{annualized_cost, capital_utilization_rate_varying, expected_option_value, option_cost, AssetQuantities, CostBook};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanConfig {
    pub start_year: i32,
    pub horizon_years: u32,
    pub period_years: u32,
    pub start_state: GrowthState,
    /// Annual growth realized in each state.
    pub growth: [f64; 3],
    pub matrix: TransitionMatrix,
    pub costs: CostBook,
    pub dispatch: DispatchOptions,
    /// Capacity multiplier applied to reconductored lines.
    pub upgrade_capacity_factor: f64,
    /// Ramp headroom of the upstream supply.
    pub ramp_headroom: f64,
    /// Lost load above this many MW marks a stage as overloaded.
    pub overload_tol_mw: f64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            start_year: 2020,
            horizon_years: 25,
            period_years: 5,
            start_state: GrowthState::Mid,
            growth: [0.0307, 0.0661, 0.0989],
            matrix: TransitionMatrix::delhi_default(),
            costs: CostBook::year_2030(),
            dispatch: DispatchOptions {
                horizon: HorizonMode::RepresentativeWeeks { seasons: 4 },
                ..DispatchOptions::default()
            },
            upgrade_capacity_factor: 2.0,
            ramp_headroom: 2.0,
            overload_tol_mw: 1e-6,
        }
    }
}

impl PlanConfig {
    pub fn n_stages(&self) -> usize {
        (self.horizon_years / self.period_years) as usize
    }

    pub fn gamma(&self) -> f64 {
        period_discount(self.costs.discount_rate, self.period_years)
    }

    pub fn validate(&self) -> Result<()> {
        if self.period_years == 0 || self.horizon_years == 0 || self.horizon_years % self.period_years != 0 {
            return Err(CoreError::validation("horizon must be a positive multiple of the period length"));
        }
        if self.growth.iter().any(|&g| !(g > -1.0)) {
            return Err(CoreError::validation("growth must exceed -1"));
        }
        if !(self.upgrade_capacity_factor > 1.0) {
            return Err(CoreError::validation("upgrade capacity factor must exceed 1"));
        }
        if !(self.overload_tol_mw >= 0.0) {
            return Err(CoreError::validation("overload tolerance must be nonnegative"));
        }
        self.matrix.validate()?;
        self.costs.validate()?;
        self.dispatch.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    NoAction,
    StorageNwa,
    TraditionalUpgrade,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Horizon,
    TraditionalUpgrade,
}

/// Option evaluation against one successor growth state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessorOption {
    pub state: GrowthState,
    pub probability: f64,
    /// Storage alone serves the successor demand without lost load.
    pub storage_feasible: bool,
    pub aic_storage: f64,
    pub aic_traditional: f64,
    pub upgrade_km: f64,
    pub option_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub period: usize,
    pub year: i32,
    pub state: GrowthState,
    pub demand_multiplier: f64,
    pub peak_demand_mw: f64,
    pub overloaded: bool,
    pub action: Action,
    pub options: Vec<SuccessorOption>,
    pub expected_option_value: Option<f64>,
    /// Installed storage after the decision.
    pub storage_power_kw: f64,
    pub storage_energy_kwh: f64,
    pub new_storage_power_kw: f64,
    pub new_storage_energy_kwh: f64,
    pub upgraded_km: f64,
    /// Peak trunk loading after dispatch and the trunk capacity, MW.
    pub trunk_loading_mw: f64,
    pub trunk_capacity_mw: f64,
    /// `F(s)`, USD/yr.
    pub stage_cost: f64,
    pub discount_factor: f64,
    pub cumulative_discounted_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanTrajectory {
    pub id: usize,
    pub seed: u64,
    pub records: Vec<StageRecord>,
    pub total_discounted_cost: f64,
    pub termination: Termination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum SolveKind {
    Detect,
    StorageOnly,
    UpgradeOnly,
}

type Key = (SolveKind, u64, Vec<(u32, u64, u64)>, Vec<(LineId, u64)>);
type Slot = Arc<Mutex<Option<Arc<SystemDesign>>>>;

/// Stage solver with a cache shared across concurrent trajectories.
pub struct PlanContext {
    pub network: Network,
    pub base_profile: LoadProfile,
    pub config: PlanConfig,
    /// Line watched for capital utilization; defaults to the first
    /// substation line.
    pub trunk_line: LineId,
    cache: Mutex<HashMap<Key, Slot>>,
}

#[derive(Debug, Clone, Default)]
struct Assets {
    storage: Vec<(StorageUnit, i32)>,
    line_capacity: std::collections::BTreeMap<LineId, f64>,
}

impl PlanContext {
    pub fn new(network: Network, base_profile: LoadProfile, config: PlanConfig) -> Result<Self> {
        network.validate()?;
        base_profile.validate(&network)?;
        config.validate()?;
        let trunk_line = network
            .substation_lines()
            .next()
            .map(|l| l.id)
            .ok_or_else(|| CoreError::validation("substation has no line"))?;
        Ok(Self {
            network,
            base_profile,
            config,
            trunk_line,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn cached_solves(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    fn trunk_capacity(&self, assets: &Assets) -> f64 {
        assets
            .line_capacity
            .get(&self.trunk_line)
            .copied()
            .unwrap_or_else(|| self.network.line(self.trunk_line).expect("trunk exists").capacity_mw)
    }

    fn solve(&self, kind: SolveKind, multiplier: f64, assets: &Assets) -> Result<Arc<SystemDesign>> {
        let units: Vec<StorageUnit> = assets.storage.iter().map(|(u, _)| *u).collect();
        let key: Key = (
            kind,
            multiplier.to_bits(),
            units.iter().map(|u| (u.bus, u.power_mw.to_bits(), u.energy_mwh.to_bits())).collect(),
            assets.line_capacity.iter().map(|(&l, c)| (l, c.to_bits())).collect(),
        );
        let slot = self.cache.lock().expect("cache lock").entry(key).or_default().clone();
        let mut guard = slot.lock().expect("slot lock");
        if let Some(d) = guard.as_ref() {
            return Ok(d.clone());
        }
        let profile = self.base_profile.scaled(multiplier);
        let cfg = &self.config;
        let resources = ResourceSet {
            storage: StorageParams::from_costbook(&cfg.costs),
            upstream: upstream_supply(&profile.total(), cfg.ramp_headroom)?,
        };
        let base = DispatchOptions {
            existing_storage: units,
            line_capacity_mw: assets.line_capacity.clone(),
            ..cfg.dispatch.clone()
        };
        let options = match kind {
            SolveKind::Detect => base.existing_only(),
            SolveKind::StorageOnly => DispatchOptions {
                allow_storage: true,
                allow_upgrades: false,
                ..base
            },
            SolveKind::UpgradeOnly => DispatchOptions {
                allow_storage: false,
                allow_upgrades: true,
                ..base
            },
        };
        let design = Arc::new(optimize_design(&self.network, &resources, &profile, &cfg.costs, &options)?);
        *guard = Some(design.clone());
        Ok(design)
    }

    fn storage_aic(&self, assets: &Assets, extra: &AssetQuantities) -> Result<f64> {
        let mut q = *extra;
        for (u, _) in &assets.storage {
            q.storage_energy_kwh += u.energy_mwh * 1000.0;
            q.storage_power_kw += u.power_mw * 1000.0;
        }
        Ok(annualized_cost(&q, &self.config.costs)?.total())
    }

    fn successor_options(&self, state: GrowthState, multiplier: f64, assets: &Assets, years_left: u32) -> Result<Vec<SuccessorOption>> {
        let cfg = &self.config;
        let row = cfg.matrix.row(state);
        let mut out = Vec::with_capacity(3);
        for next in GrowthState::ALL {
            let m = multiplier * (1.0 + cfg.growth[next.index()]).powi(cfg.period_years as i32);
            let storage = self.solve(SolveKind::StorageOnly, m, assets)?;
            let upgrade = self.solve(SolveKind::UpgradeOnly, m, assets)?;
            let feasible = storage.dispatch.max_lost_load_mw() <= cfg.overload_tol_mw;
            let aic_storage = self.storage_aic(assets, &storage.quantities())?;
            let km = upgrade.upgraded_km();
            let aic_traditional = cfg.costs.annual_line_cost(km);
            // Storage that cannot carry the successor demand still leaves
            // the upgrade to be paid from the start.
            let storage_path = if feasible { aic_storage } else { aic_storage + aic_traditional };
            let valuation = option_cost(
                aic_traditional,
                storage_path,
                aic_traditional,
                cfg.period_years,
                years_left.max(cfg.period_years),
                cfg.costs.discount_rate,
            )?;
            out.push(SuccessorOption {
                state: next,
                probability: row[next.index()],
                storage_feasible: feasible,
                aic_storage,
                aic_traditional,
                upgrade_km: km,
                option_value: valuation.option_value,
            });
        }
        Ok(out)
    }

    /// Runs one trajectory along the given growth path.
    pub fn simulate_path(&self, path: &GrowthTrajectory, id: usize, seed: u64) -> Result<PlanTrajectory> {
        let cfg = &self.config;
        let gamma = cfg.gamma();
        let mut assets = Assets::default();
        let mut multiplier = 1.0;
        let mut records: Vec<StageRecord> = Vec::new();
        let mut discount = 1.0;
        let mut cumulative = 0.0;
        let mut termination = Termination::Horizon;
        let base_peak = self.base_profile.peak();

        for (k, period) in path.periods.iter().enumerate() {
            if k > 0 {
                multiplier *= (1.0 + period.growth).powi(cfg.period_years as i32);
            }
            let year = cfg.start_year + (k as u32 * cfg.period_years) as i32;
            assets
                .storage
                .retain(|(_, installed)| year - installed < cfg.costs.storage_life_years as i32);
            let years_left = cfg.horizon_years - k as u32 * cfg.period_years;

            let detect = self.solve(SolveKind::Detect, multiplier, &assets)?;
            let overloaded = detect.dispatch.max_lost_load_mw() > cfg.overload_tol_mw;
            let mut options = Vec::new();
            let mut expected = None;
            let (action, stage_cost, new_p, new_e, km, loading);
            if !overloaded {
                action = Action::NoAction;
                stage_cost = self.storage_aic(
                    &assets,
                    &AssetQuantities {
                        charging_cost_usd: detect.charging_cost,
                        ..Default::default()
                    },
                )?;
                new_p = 0.0;
                new_e = 0.0;
                km = 0.0;
                loading = peak_trunk(&detect, self.trunk_line);
            } else {
                options = self.successor_options(period.state, multiplier, &assets, years_left)?;
                let row: Vec<f64> = options.iter().map(|o| o.probability).collect();
                let values: Vec<f64> = options.iter().map(|o| o.option_value).collect();
                let d = expected_option_value(&row, &values)?;
                expected = Some(d);
                let now = self.solve(SolveKind::StorageOnly, multiplier, &assets)?;
                let now_feasible = now.dispatch.max_lost_load_mw() <= cfg.overload_tol_mw;
                if d > 0.0 && now_feasible {
                    action = Action::StorageNwa;
                    new_p = now.new_power_mw();
                    new_e = now.new_energy_mwh();
                    stage_cost = self.storage_aic(&assets, &now.quantities())?;
                    for site in &now.storage {
                        if site.new_power_mw > 0.0 || site.new_energy_mwh > 0.0 {
                            assets.storage.push((
                                StorageUnit {
                                    bus: site.bus,
                                    power_mw: site.new_power_mw,
                                    energy_mwh: site.new_energy_mwh,
                                },
                                year,
                            ));
                        }
                    }
                    km = 0.0;
                    loading = peak_trunk(&now, self.trunk_line);
                } else {
                    action = Action::TraditionalUpgrade;
                    let up = self.solve(SolveKind::UpgradeOnly, multiplier, &assets)?;
                    km = up.upgraded_km();
                    stage_cost = cfg.costs.annual_line_cost(km);
                    for u in &up.upgrades {
                        let base = self.network.line(u.line).expect("upgraded line exists").capacity_mw;
                        let cur = assets.line_capacity.get(&u.line).copied().unwrap_or(base);
                        assets.line_capacity.insert(u.line, cur * cfg.upgrade_capacity_factor);
                    }
                    // Zero salvage for retired storage.
                    assets.storage.clear();
                    new_p = 0.0;
                    new_e = 0.0;
                    loading = peak_trunk(&up, self.trunk_line);
                }
            }
            cumulative += discount * stage_cost;
            let (power, energy) = assets
                .storage
                .iter()
                .fold((0.0, 0.0), |(p, e), (u, _)| (p + u.power_mw, e + u.energy_mwh));
            records.push(StageRecord {
                period: k,
                year,
                state: period.state,
                demand_multiplier: multiplier,
                peak_demand_mw: base_peak * multiplier,
                overloaded,
                action,
                options,
                expected_option_value: expected,
                storage_power_kw: power * 1000.0,
                storage_energy_kwh: energy * 1000.0,
                new_storage_power_kw: new_p * 1000.0,
                new_storage_energy_kwh: new_e * 1000.0,
                upgraded_km: km,
                trunk_loading_mw: loading,
                trunk_capacity_mw: self.trunk_capacity(&assets),
                stage_cost,
                discount_factor: discount,
                cumulative_discounted_cost: cumulative,
            });
            discount *= gamma;
            if action == Action::TraditionalUpgrade {
                termination = Termination::TraditionalUpgrade;
                break;
            }
        }

        // Realized-path value by backward recursion of the stage equation.
        let mut total = 0.0;
        for r in records.iter().rev() {
            total = stage_value(r.stage_cost, gamma, &[1.0], &[total])?;
        }
        Ok(PlanTrajectory {
            id,
            seed,
            records,
            total_discounted_cost: total,
            termination,
        })
    }

    /// Samples a growth path from `seed` and simulates it.
    pub fn simulate_plan(&self, seed: u64, id: usize) -> Result<PlanTrajectory> {
        let cfg = &self.config;
        let path = sample_trajectory(&cfg.matrix, cfg.start_state, cfg.n_stages(), &cfg.growth, seed)?;
        self.simulate_path(&path, id, seed)
    }

    /// Independent trajectories with sub-seeds drawn from `seed`, run in
    /// parallel; output order follows the trajectory index.
    pub fn run_study(&self, n: usize, seed: u64) -> Result<Study> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seeds: Vec<u64> = (0..n).map(|_| rng.gen()).collect();
        let trajectories = seeds
            .par_iter()
            .enumerate()
            .map(|(i, &s)| self.simulate_plan(s, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Study::new(trajectories, self.config.n_stages()))
    }
}

fn peak_trunk(design: &SystemDesign, trunk: LineId) -> f64 {
    design.dispatch.peak_flows().get(&trunk).copied().unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodFrequencies {
    pub period: usize,
    pub no_action: usize,
    pub storage_nwa: usize,
    pub traditional_upgrade: usize,
    /// Trajectories that ended before this period.
    pub terminated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub trajectories: usize,
    pub mean_total_cost: f64,
    /// Standard error of the mean total discounted cost.
    pub std_error: f64,
    pub frequencies: Vec<PeriodFrequencies>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub trajectories: Vec<PlanTrajectory>,
    pub summary: StudySummary,
}

impl Study {
    fn new(trajectories: Vec<PlanTrajectory>, n_stages: usize) -> Self {
        let costs: Vec<f64> = trajectories.iter().map(|t| t.total_discounted_cost).collect();
        let n = costs.len();
        let mean = crate::numeric::mean(&costs);
        let std_error = if n > 1 { crate::numeric::std_dev(&costs) / (n as f64).sqrt() } else { 0.0 };
        let frequencies = (0..n_stages)
            .map(|k| {
                let mut f = PeriodFrequencies {
                    period: k,
                    no_action: 0,
                    storage_nwa: 0,
                    traditional_upgrade: 0,
                    terminated: 0,
                };
                for t in &trajectories {
                    match t.records.get(k).map(|r| r.action) {
                        Some(Action::NoAction) => f.no_action += 1,
                        Some(Action::StorageNwa) => f.storage_nwa += 1,
                        Some(Action::TraditionalUpgrade) => f.traditional_upgrade += 1,
                        None => f.terminated += 1,
                    }
                }
                f
            })
            .collect();
        Self {
            trajectories,
            summary: StudySummary {
                trajectories: n,
                mean_total_cost: mean,
                std_error,
                frequencies,
            },
        }
    }

    /// One JSON object per stage, tagged with the trajectory id.
    pub fn log_lines(&self) -> String {
        let mut out = String::new();
        for t in &self.trajectories {
            out.push_str(&trajectory_log(t));
        }
        out
    }
}

pub fn trajectory_log(t: &PlanTrajectory) -> String {
    #[derive(Serialize)]
    struct Line<'a> {
        trajectory: usize,
        seed: u64,
        #[serde(flatten)]
        record: &'a StageRecord,
    }
    let mut out = String::new();
    for r in &t.records {
        let line = Line {
            trajectory: t.id,
            seed: t.seed,
            record: r,
        };
        out.push_str(&serde_json::to_string(&line).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Capital utilization of the flexible and the traditional plan along a
/// fixed growth path covering every period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurComparison {
    pub flexible: f64,
    pub traditional: f64,
    pub flexible_loading_mw: Vec<f64>,
    pub flexible_capacity_mw: Vec<f64>,
    pub traditional_loading_mw: Vec<f64>,
    pub traditional_capacity_mw: Vec<f64>,
}

/// The flexible plan stores while storage alone serves demand and upgrades
/// once it cannot; the traditional plan upgrades at the first overload.
/// Both then run unconstrained to the horizon.
pub fn compare_cur(ctx: &PlanContext, state: GrowthState) -> Result<CurComparison> {
    let cfg = &ctx.config;
    let g = cfg.growth[state.index()];
    let run = |flexible: bool| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut assets = Assets::default();
        let mut loading = Vec::new();
        let mut capacity = Vec::new();
        let mut multiplier = 1.0;
        for k in 0..cfg.n_stages() {
            if k > 0 {
                multiplier *= (1.0 + g).powi(cfg.period_years as i32);
            }
            let detect = ctx.solve(SolveKind::Detect, multiplier, &assets)?;
            let design = if detect.dispatch.max_lost_load_mw() <= cfg.overload_tol_mw {
                detect
            } else {
                let sto = if flexible { Some(ctx.solve(SolveKind::StorageOnly, multiplier, &assets)?) } else { None };
                match sto.filter(|d| d.dispatch.max_lost_load_mw() <= cfg.overload_tol_mw) {
                    Some(d) => {
                        for site in &d.storage {
                            if site.new_power_mw > 0.0 {
                                assets.storage.push((
                                    StorageUnit {
                                        bus: site.bus,
                                        power_mw: site.new_power_mw,
                                        energy_mwh: site.new_energy_mwh,
                                    },
                                    0,
                                ));
                            }
                        }
                        d
                    }
                    None => {
                        let up = ctx.solve(SolveKind::UpgradeOnly, multiplier, &assets)?;
                        for u in &up.upgrades {
                            let base = ctx.network.line(u.line).expect("line exists").capacity_mw;
                            let cur = assets.line_capacity.get(&u.line).copied().unwrap_or(base);
                            assets.line_capacity.insert(u.line, cur * cfg.upgrade_capacity_factor);
                        }
                        assets.storage.clear();
                        ctx.solve(SolveKind::Detect, multiplier, &assets)?
                    }
                }
            };
            loading.push(peak_trunk(&design, ctx.trunk_line));
            capacity.push(ctx.trunk_capacity(&assets));
        }
        Ok((loading, capacity))
    };
    let (fl, fc) = run(true)?;
    let (tl, tc) = run(false)?;
    Ok(CurComparison {
        flexible: capital_utilization_rate_varying(&fl, &fc)?,
        traditional: capital_utilization_rate_varying(&tl, &tc)?,
        flexible_loading_mw: fl,
        flexible_capacity_mw: fc,
        traditional_loading_mw: tl,
        traditional_capacity_mw: tc,
    })
}
