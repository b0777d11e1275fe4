use anyhow::{bail, Result};
use gridnwa_core::demand::{
    bucket_masses, build_transition_matrix, growth_samples, load_consumption_csv, mcmc_fit, representative_growth,
    Gompertz, GrowthState, McmcConfig, TransitionMatrix,
};
use gridnwa_core::dispatch::{
    dispatch_report, optimize_design, upstream_supply, DispatchOptions, LoadProfile, ResourceSet, StorageParams,
    SystemDesign,
};
use gridnwa_core::mdp::{compare_cur, Action, PlanConfig, PlanContext, PlanTrajectory};
use gridnwa_core::network::Network;
use gridnwa_core::scaleup::{
    aggregate_city, city_classes, dispatch_binding, read_cities, read_class_shares, ClassStudy, ClassStudyConfig,
};
use gridnwa_core::valuation::{annualized_cost, expected_option_value, option_cost, CostBook};
use gridnwa_core::CoreError;
use serde::Serialize;

use crate::config::{validation, LoadedConfig, Scenario};
use crate::output::RunDir;

pub struct Ctx<'a> {
    pub loaded: &'a LoadedConfig,
    pub seed: Option<u64>,
    pub out: RunDir,
}

impl Ctx<'_> {
    fn seed(&self) -> Result<u64> {
        match self.seed {
            Some(s) => Ok(s),
            None => bail!(validation("this command is stochastic and needs a seed (--seed or `seed` in the config)")),
        }
    }

    fn dispatch_options(&self) -> DispatchOptions {
        let s = &self.loaded.config.study;
        DispatchOptions {
            india_mode: s.india_mode,
            horizon: s.horizon_mode(),
            ..DispatchOptions::default()
        }
    }

    /// Demand multiplier from the start year to the study year in `state`.
    fn multiplier(&self, state: GrowthState) -> f64 {
        let c = &self.loaded.config;
        (1.0 + c.growth.rates[state.index()]).powi(c.study.year - c.study.start_year)
    }

    fn solve(&self, network: &Network, profile: &LoadProfile, options: DispatchOptions) -> Result<SystemDesign> {
        let costs = &self.loaded.config.costs;
        let resources = ResourceSet {
            storage: StorageParams::from_costbook(costs),
            upstream: upstream_supply(&profile.total(), 2.0)?,
        };
        Ok(optimize_design(network, &resources, profile, costs, &options)?)
    }

    fn design_for_year(&self) -> Result<(Network, f64, SystemDesign)> {
        let network = self.loaded.network()?;
        let m = self.multiplier(self.loaded.config.study.state);
        let profile = self.loaded.demand(&network)?.scaled(m);
        let design = self.solve(&network, &profile, self.dispatch_options())?;
        Ok((network, m, design))
    }

    fn plan_context(&self) -> Result<PlanContext> {
        let c = &self.loaded.config;
        let network = self.loaded.network()?;
        let profile = self.loaded.demand(&network)?;
        let config = PlanConfig {
            start_year: c.study.start_year,
            horizon_years: c.study.horizon_years,
            period_years: c.study.period_years,
            start_state: c.study.state,
            growth: c.growth.rates,
            matrix: c.growth.transition_matrix()?,
            costs: c.costs.clone(),
            dispatch: self.dispatch_options(),
            ..PlanConfig::default()
        };
        Ok(PlanContext::new(network, profile, config)?)
    }
}

#[derive(Serialize)]
struct FitReport {
    samples: usize,
    first_year: i32,
    last_year: i32,
    distribution: Gompertz,
    iterations: usize,
    acceptance_rate: f64,
    diagnostic: f64,
    bucket_masses: [f64; 3],
    representative_growth: [f64; 3],
}

fn fit_report(ctx: &Ctx) -> Result<FitReport> {
    let c = &ctx.loaded.config;
    let rows = load_consumption_csv(&ctx.loaded.required(&c.paths.consumption, "consumption")?)?;
    let values: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let samples = growth_samples(&values)?;
    let mcmc = McmcConfig {
        seed: ctx.seed()?,
        ..c.mcmc
    };
    let fit = mcmc_fit(&samples, &mcmc)?;
    let dist = fit.growth_distribution();
    Ok(FitReport {
        samples: samples.len(),
        first_year: rows[0].0,
        last_year: rows[rows.len() - 1].0,
        distribution: fit.distribution,
        iterations: fit.iterations,
        acceptance_rate: fit.acceptance_rate,
        diagnostic: fit.diagnostic,
        bucket_masses: bucket_masses(&dist, &c.growth.buckets)?,
        representative_growth: representative_growth(&dist, &c.growth.buckets),
    })
}

pub fn fit(ctx: &mut Ctx) -> Result<()> {
    let report = fit_report(ctx)?;
    ctx.out.write_json("fit.json", &report)
}

#[derive(Serialize)]
struct MatrixRow {
    source: &'static str,
    from: GrowthState,
    to_low: f64,
    to_mid: f64,
    to_high: f64,
}

fn matrix_rows(source: &'static str, m: &TransitionMatrix) -> Vec<MatrixRow> {
    GrowthState::ALL
        .iter()
        .map(|&s| {
            let r = m.row(s);
            MatrixRow {
                source,
                from: s,
                to_low: r[0],
                to_mid: r[1],
                to_high: r[2],
            }
        })
        .collect()
}

pub fn matrix(ctx: &mut Ctx) -> Result<()> {
    let report = fit_report(ctx)?;
    let fitted = build_transition_matrix(
        &gridnwa_core::demand::GrowthDistribution::Gompertz(report.distribution),
        &ctx.loaded.config.growth.buckets,
    )?;
    let configured = ctx.loaded.config.growth.transition_matrix()?;
    let mut rows = matrix_rows("fitted", &fitted);
    rows.extend(matrix_rows("configured", &configured));
    ctx.out.write_csv("transition_matrix.csv", &rows)?;
    ctx.out.write_json(
        "matrix.json",
        &serde_json::json!({ "fitted": fitted, "configured": configured, "fit": report }),
    )
}

#[derive(Serialize)]
struct OptimizeSummary {
    year: i32,
    state: GrowthState,
    demand_multiplier: f64,
    peak_demand_mw: f64,
    max_substation_mw: f64,
    storage_power_mw: f64,
    storage_energy_mwh: f64,
    storage_duration_h: Option<f64>,
    upgraded_km: f64,
    lost_load_mwh: f64,
    total_cost_usd_per_yr: f64,
    solver: String,
}

pub fn optimize(ctx: &mut Ctx) -> Result<()> {
    let (_, m, design) = ctx.design_for_year()?;
    let d = &design.dispatch;
    let power = design.new_power_mw();
    let summary = OptimizeSummary {
        year: ctx.loaded.config.study.year,
        state: ctx.loaded.config.study.state,
        demand_multiplier: m,
        peak_demand_mw: d.demand.iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max),
        max_substation_mw: (0..d.len()).map(|t| d.substation_flow(t)).fold(f64::NEG_INFINITY, f64::max),
        storage_power_mw: power,
        storage_energy_mwh: design.new_energy_mwh(),
        storage_duration_h: (power > 1e-9).then(|| design.new_energy_mwh() / power),
        upgraded_km: design.upgraded_km(),
        lost_load_mwh: d.total_lost_load_mwh(),
        total_cost_usd_per_yr: design.total_cost,
        solver: design.solver.clone(),
    };
    ctx.out.write_json("optimize_summary.json", &summary)?;
    ctx.out.write_json("design.json", &design)?;
    ctx.out.write_csv("dispatch.csv", &dispatch_report(&design))
}

#[derive(Serialize)]
struct ValuationRow {
    scenario: String,
    aic_traditional_usd_per_yr: f64,
    aic_storage_usd_per_yr: f64,
    aic_deferred_usd_per_yr: f64,
    deferral_years: u32,
    horizon_years: u32,
    pv_traditional_usd: f64,
    pv_nwa_usd: f64,
    option_value_usd_per_yr: f64,
    nwa_feasible: bool,
}

/// One scenario per growth state from storage-only and upgrade-only solves.
fn derived_scenarios(ctx: &Ctx) -> Result<Vec<Scenario>> {
    let network = ctx.loaded.network()?;
    let base = ctx.loaded.demand(&network)?;
    let costs: &CostBook = &ctx.loaded.config.costs;
    let mut out = Vec::new();
    for s in GrowthState::ALL {
        let profile = base.scaled(ctx.multiplier(s));
        let storage = ctx.solve(
            &network,
            &profile,
            DispatchOptions {
                allow_upgrades: false,
                ..ctx.dispatch_options()
            },
        )?;
        let upgrade = ctx.solve(
            &network,
            &profile,
            DispatchOptions {
                allow_storage: false,
                ..ctx.dispatch_options()
            },
        )?;
        let trad = costs.annual_line_cost(upgrade.upgraded_km());
        let mut sto = annualized_cost(&storage.quantities(), costs)?.total();
        // Storage that cannot carry the demand alone still needs the upgrade.
        if storage.dispatch.max_lost_load_mw() > 1e-6 {
            sto += trad;
        }
        out.push(Scenario {
            name: s.name().to_string(),
            aic_traditional: trad,
            aic_storage: sto,
            aic_deferred: None,
        });
    }
    Ok(out)
}

pub fn value(ctx: &mut Ctx) -> Result<()> {
    let c = &ctx.loaded.config;
    let scenarios = if c.value.scenarios.is_empty() {
        derived_scenarios(ctx)?
    } else {
        c.value.scenarios.clone()
    };
    let mut rows = Vec::new();
    for s in &scenarios {
        let def = s.aic_deferred.unwrap_or(s.aic_traditional);
        let v = option_cost(
            s.aic_traditional,
            s.aic_storage,
            def,
            c.value.deferral_years,
            c.value.horizon_years,
            c.costs.discount_rate,
        )?;
        rows.push(ValuationRow {
            scenario: s.name.clone(),
            aic_traditional_usd_per_yr: v.aic_traditional,
            aic_storage_usd_per_yr: v.aic_storage,
            aic_deferred_usd_per_yr: v.aic_deferred,
            deferral_years: v.deferral_years,
            horizon_years: v.horizon_years,
            pv_traditional_usd: v.pv_traditional,
            pv_nwa_usd: v.pv_nwa,
            option_value_usd_per_yr: v.option_value,
            nwa_feasible: v.nwa_feasible(),
        });
    }
    let row = match &c.value.row {
        Some(r) => Some(r.clone()),
        None if c.value.scenarios.is_empty() => Some(c.growth.transition_matrix()?.row(c.study.state).to_vec()),
        None => None,
    };
    let expected = match &row {
        Some(r) => Some(expected_option_value(r, &rows.iter().map(|v| v.option_value_usd_per_yr).collect::<Vec<_>>())?),
        None => None,
    };
    ctx.out.write_csv("valuation.csv", &rows)?;
    ctx.out.write_json(
        "valuation.json",
        &serde_json::json!({ "row": row, "expected_option_value_usd_per_yr": expected }),
    )
}

pub fn simulate(ctx: &mut Ctx) -> Result<()> {
    let seed = ctx.seed()?;
    let plan = ctx.plan_context()?;
    let study = plan.run_study(ctx.loaded.config.study.trajectories, seed)?;
    let cur = compare_cur(&plan, ctx.loaded.config.study.state)?;
    ctx.out.write("trajectories.jsonl", study.log_lines().as_bytes())?;
    ctx.out.write_json("summary.json", &serde_json::json!({ "summary": study.summary, "cur": cur }))
}

#[derive(Serialize)]
struct CityRow {
    city: String,
    variant: String,
    energy_usd_per_kwh: f64,
    power_usd_per_kw: f64,
    storage_gwh: f64,
    storage_gw: f64,
    deferred_km: f64,
    serviced_km: f64,
    flexible_budget_usd: f64,
    traditional_budget_usd: f64,
    savings_fraction: f64,
    nwa_worse: bool,
}

#[derive(Serialize)]
struct ClassRow {
    variant: String,
    class: u32,
    action: Action,
    storage_feasible: bool,
    storage_energy_mwh: f64,
    storage_power_mw: f64,
    upgraded_km: f64,
    aic_storage_usd_per_yr: f64,
    aic_traditional_usd_per_yr: f64,
    option_value_usd_per_yr: f64,
}

pub fn scale(ctx: &mut Ctx) -> Result<()> {
    let c = &ctx.loaded.config;
    let shares = read_class_shares(&std::fs::read_to_string(ctx.loaded.required(&c.paths.classes, "classes")?)?)?;
    let cities = read_cities(&std::fs::read_to_string(ctx.loaded.required(&c.paths.cities, "cities")?)?)?;
    let network = ctx.loaded.network()?;
    let base = ctx.loaded.demand(&network)?;
    let config = ClassStudyConfig {
        growth_years: (c.study.year - c.study.start_year) as u32,
        annual_growth: c.growth.rates[c.study.state.index()],
        deferral_years: c.scale.deferral_years,
        horizon_years: c.scale.horizon_years,
        dispatch: ctx.dispatch_options(),
        ..ClassStudyConfig::default()
    };
    // Class outcomes do not depend on the city; only the scaling does.
    let first = city_classes(&network, &base, &shares, &cities[0])?;
    let study = ClassStudy::new(network.clone(), &base, first, config)?;

    let mut city_rows = Vec::new();
    let mut class_rows = Vec::new();
    let mut binding = Vec::new();
    let mut by_variant = Vec::new();
    for (name, e, p) in &c.scale.variants {
        let book = c.costs.clone().with_storage_costs(*e, *p);
        let outcomes = study.outcomes(&book)?;
        for o in &outcomes {
            class_rows.push(ClassRow {
                variant: name.clone(),
                class: o.class,
                action: o.action,
                storage_feasible: o.storage_feasible,
                storage_energy_mwh: o.storage_energy_mwh,
                storage_power_mw: o.storage_power_mw,
                upgraded_km: o.upgraded_km,
                aic_storage_usd_per_yr: o.aic_storage,
                aic_traditional_usd_per_yr: o.aic_traditional,
                option_value_usd_per_yr: o.option_value,
            });
        }
        by_variant.push((name.clone(), *e, *p, outcomes));
    }
    for city in &cities {
        let classes = city_classes(&network, &base, &shares, city)?;
        let mut aggs = Vec::new();
        for (name, e, p, outcomes) in &by_variant {
            let a = aggregate_city(&city.city, outcomes, &classes, c.scale.deferral_years, c.scale.horizon_years)?;
            city_rows.push(CityRow {
                city: city.city.clone(),
                variant: name.clone(),
                energy_usd_per_kwh: *e,
                power_usd_per_kw: *p,
                storage_gwh: a.storage_gwh,
                storage_gw: a.storage_gw,
                deferred_km: a.deferred_km,
                serviced_km: a.serviced_km,
                flexible_budget_usd: a.flexible_budget_usd,
                traditional_budget_usd: a.traditional_budget_usd,
                savings_fraction: a.savings_fraction,
                nwa_worse: a.nwa_worse,
            });
            aggs.push(a);
        }
        if aggs.len() >= 2 {
            binding.push((city.city.clone(), dispatch_binding(&aggs[0], &aggs[1])));
        }
    }
    let breakeven = match study.breakeven(&c.costs, c.scale.ray_start, c.scale.ray_end, 1.0) {
        Ok(b) => serde_json::json!({ "found": true, "breakeven": b }),
        Err(CoreError::NoSignChange { low, high }) => {
            serde_json::json!({ "found": false, "option_value_at_start": low, "option_value_at_end": high })
        }
        Err(e) => return Err(e.into()),
    };
    ctx.out.write_csv("city_totals.csv", &city_rows)?;
    ctx.out.write_csv("class_outcomes.csv", &class_rows)?;
    ctx.out.write_json(
        "breakeven.json",
        &serde_json::json!({ "search": breakeven, "dispatch_binding": binding }),
    )
}

#[derive(Serialize)]
struct TrajectoryRow {
    period: usize,
    year: i32,
    state: GrowthState,
    demand_multiplier: f64,
    peak_demand_mw: f64,
    action: Action,
    storage_power_kw: f64,
    storage_energy_kwh: f64,
    trunk_loading_mw: f64,
    trunk_capacity_mw: f64,
    stage_cost_usd_per_yr: f64,
    cumulative_discounted_cost_usd: f64,
}

fn trajectory_rows(t: &PlanTrajectory) -> Vec<TrajectoryRow> {
    t.records
        .iter()
        .map(|r| TrajectoryRow {
            period: r.period,
            year: r.year,
            state: r.state,
            demand_multiplier: r.demand_multiplier,
            peak_demand_mw: r.peak_demand_mw,
            action: r.action,
            storage_power_kw: r.storage_power_kw,
            storage_energy_kwh: r.storage_energy_kwh,
            trunk_loading_mw: r.trunk_loading_mw,
            trunk_capacity_mw: r.trunk_capacity_mw,
            stage_cost_usd_per_yr: r.stage_cost,
            cumulative_discounted_cost_usd: r.cumulative_discounted_cost,
        })
        .collect()
}

/// Plot-ready tables: the study-year dispatch and one sampled trajectory.
pub fn report(ctx: &mut Ctx) -> Result<()> {
    let seed = ctx.seed()?;
    let (_, _, design) = ctx.design_for_year()?;
    let trajectory = ctx.plan_context()?.simulate_plan(seed, 0)?;
    ctx.out.write_csv("report_dispatch.csv", &dispatch_report(&design))?;
    ctx.out.write_csv("report_trajectory.csv", &trajectory_rows(&trajectory))
}
