use std::collections::BTreeMap;

use gridnwa_lp::{solve_model, BlandSimplex, CertificationReport, HighsSolver, LpModel, LpSolver, LpStatus};
use serde::{Deserialize, Serialize};

use super::build::{build_dispatch_model, ModelIndex};
use super::params::{DispatchOptions, LoadProfile, ResourceSet, SolverChoice, AUTO_REFERENCE_ROWS};
use crate::error::{CoreError, Result};
use crate::network::{BusId, LineId, Network};
use crate::valuation::{AssetQuantities, CostBook};

/// Decisions below this size are reported as zero.
pub const SIZE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageSite {
    pub bus: BusId,
    pub existing_power_mw: f64,
    pub existing_energy_mwh: f64,
    pub new_power_mw: f64,
    pub new_energy_mwh: f64,
}

impl StorageSite {
    pub fn power_mw(&self) -> f64 {
        self.existing_power_mw + self.new_power_mw
    }

    pub fn energy_mwh(&self) -> f64 {
        self.existing_energy_mwh + self.new_energy_mwh
    }

    /// Hours of discharge at rated power, `None` without power.
    pub fn duration_h(&self) -> Option<f64> {
        (self.power_mw() > SIZE_TOL).then(|| self.energy_mwh() / self.power_mw())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineUpgrade {
    pub line: LineId,
    pub added_mw: f64,
    pub length_km: f64,
}

/// Objective terms, USD/yr.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostItems {
    pub storage_energy: f64,
    pub storage_power: f64,
    pub line_upgrade: f64,
    pub upstream_energy: f64,
    pub storage_variable: f64,
    pub startup: f64,
    pub lost_load: f64,
}

impl CostItems {
    pub fn total(&self) -> f64 {
        self.storage_energy
            + self.storage_power
            + self.line_upgrade
            + self.upstream_energy
            + self.storage_variable
            + self.startup
            + self.lost_load
    }
}

/// Per-step series of an optimal dispatch. `[t][k]` indexing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dispatch {
    pub hours: Vec<usize>,
    pub weights: Vec<f64>,
    pub period_len: usize,
    pub load_buses: Vec<BusId>,
    pub demand: Vec<Vec<f64>>,
    pub upstream: Vec<f64>,
    pub export: Vec<f64>,
    pub lost_load: Vec<Vec<f64>>,
    pub lines: Vec<LineId>,
    pub flow: Vec<Vec<f64>>,
    pub angle_buses: Vec<BusId>,
    pub theta: Vec<Vec<f64>>,
    pub charge: Vec<Vec<f64>>,
    pub discharge: Vec<Vec<f64>>,
    pub soc: Vec<Vec<f64>>,
    pub tariff: Vec<f64>,
    /// Duals of the nodal balance rows, USD/MWh per unit weight.
    pub balance_duals: Vec<Vec<f64>>,
}

impl Dispatch {
    pub fn len(&self) -> usize {
        self.hours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hours.is_empty()
    }

    /// Net substation import, MW.
    pub fn substation_flow(&self, t: usize) -> f64 {
        self.upstream[t] - self.export[t]
    }

    pub fn total_lost_load_mwh(&self) -> f64 {
        self.lost_load
            .iter()
            .zip(&self.weights)
            .map(|(row, w)| w * row.iter().sum::<f64>())
            .sum()
    }

    pub fn max_lost_load_mw(&self) -> f64 {
        self.lost_load.iter().flatten().fold(0.0, |a, &b| a.max(b))
    }

    /// Peak absolute flow per line, MW.
    pub fn peak_flows(&self) -> BTreeMap<LineId, f64> {
        self.lines
            .iter()
            .enumerate()
            .map(|(k, &id)| (id, self.flow.iter().fold(0.0_f64, |a, row| a.max(row[k].abs()))))
            .collect()
    }

    pub fn flow_series(&self) -> BTreeMap<LineId, Vec<f64>> {
        self.lines
            .iter()
            .enumerate()
            .map(|(k, &id)| (id, self.flow.iter().map(|row| row[k]).collect()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDesign {
    pub storage: Vec<StorageSite>,
    pub upgrades: Vec<LineUpgrade>,
    pub dispatch: Dispatch,
    pub costs: CostItems,
    /// LP objective, USD/yr.
    pub total_cost: f64,
    /// Weighted storage charging energy at the tariff, USD/yr.
    pub charging_cost: f64,
    pub solver: String,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub duality_gap: f64,
    pub passed: bool,
}

impl From<&CertificationReport> for Certificate {
    fn from(r: &CertificationReport) -> Self {
        Self {
            primal_residual: r.primal_residual.max(r.bound_violation),
            dual_residual: r.dual_residual.max(r.complementarity),
            duality_gap: r.duality_gap,
            passed: r.passed,
        }
    }
}

impl SystemDesign {
    // `+ 0.0` turns the -0.0 of an empty float sum into 0.0.
    pub fn new_energy_mwh(&self) -> f64 {
        self.storage.iter().map(|s| s.new_energy_mwh).sum::<f64>() + 0.0
    }

    pub fn new_power_mw(&self) -> f64 {
        self.storage.iter().map(|s| s.new_power_mw).sum::<f64>() + 0.0
    }

    pub fn upgraded_km(&self) -> f64 {
        self.upgrades.iter().map(|u| u.length_km).sum::<f64>() + 0.0
    }

    pub fn has_investment(&self) -> bool {
        self.new_power_mw() > SIZE_TOL || self.new_energy_mwh() > SIZE_TOL || !self.upgrades.is_empty()
    }

    /// New assets of this design, for annualization.
    pub fn quantities(&self) -> AssetQuantities {
        AssetQuantities {
            storage_energy_kwh: self.new_energy_mwh() * 1000.0,
            storage_power_kw: self.new_power_mw() * 1000.0,
            upgraded_km: self.upgraded_km(),
            charging_cost_usd: self.charging_cost,
        }
    }
}

fn solver_for(choice: SolverChoice, rows: usize) -> Box<dyn LpSolver> {
    match choice {
        SolverChoice::Reference => Box::new(BlandSimplex::default()),
        SolverChoice::Highs => Box::new(HighsSolver::default()),
        SolverChoice::Auto if rows <= AUTO_REFERENCE_ROWS => Box::new(BlandSimplex::default()),
        SolverChoice::Auto => Box::new(HighsSolver::default()),
    }
}

/// Solves a built model and extracts the design; fails unless certified.
pub fn solve_design(model: &LpModel, idx: &ModelIndex, network: &Network, choice: SolverChoice) -> Result<SystemDesign> {
    let solver = solver_for(choice, model.num_constraints());
    let (sol, report) = solve_model(model, solver.as_ref())?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(CoreError::Infeasible(
                "dispatch LP is infeasible; check angle bounds and upstream capacity".into(),
            ))
        }
        LpStatus::Unbounded => return Err(CoreError::Unbounded("dispatch LP is unbounded".into())),
    }
    if !report.passed {
        return Err(CoreError::Uncertified(format!(
            "{} solution failed certification: primal {:.3e}, dual {:.3e}, gap {:.3e}",
            sol.solver, report.primal_residual, report.dual_residual, report.duality_gap
        )));
    }
    Ok(extract(model, idx, network, &sol.primal, &sol.duals, sol.objective, sol.solver, &report))
}

fn clean(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        0.0
    } else {
        x
    }
}

fn extract(
    model: &LpModel,
    idx: &ModelIndex,
    network: &Network,
    x: &[f64],
    duals: &[f64],
    objective: f64,
    solver: &str,
    report: &CertificationReport,
) -> SystemDesign {
    let val = |v: gridnwa_lp::VarId| clean(x[v.0]);
    let h = &idx.horizon;
    let cost_of = |v: gridnwa_lp::VarId| model.variables[v.0].cost;
    let vals = |m: &Vec<Vec<gridnwa_lp::VarId>>| -> Vec<Vec<f64>> {
        m.iter().map(|row| row.iter().map(|&v| val(v)).collect()).collect()
    };
    let dispatch = Dispatch {
        hours: h.hours.clone(),
        weights: h.weights.clone(),
        period_len: h.period_len,
        load_buses: idx.load_buses.clone(),
        demand: idx.demand.clone(),
        upstream: idx.pi.iter().map(|&v| val(v)).collect(),
        export: idx.export.iter().map(|e| e.map_or(0.0, val)).collect(),
        lost_load: vals(&idx.chi),
        lines: idx.lines.clone(),
        flow: vals(&idx.flow),
        angle_buses: idx.angle_buses.clone(),
        theta: vals(&idx.theta),
        charge: vals(&idx.charge),
        discharge: vals(&idx.discharge),
        soc: vals(&idx.soc),
        tariff: idx.tariff.clone(),
        balance_duals: idx
            .balance_rows
            .iter()
            .zip(&h.weights)
            .map(|(rows, w)| rows.iter().map(|&r| duals[r] / w).collect())
            .collect(),
    };

    let storage: Vec<StorageSite> = idx
        .sites
        .iter()
        .map(|s| StorageSite {
            bus: s.bus,
            existing_power_mw: s.existing_power_mw,
            existing_energy_mwh: s.existing_energy_mwh,
            new_power_mw: s.power.map_or(0.0, |v| snap(val(v))),
            new_energy_mwh: s.energy.map_or(0.0, |v| snap(val(v))),
        })
        .collect();
    let upgrades: Vec<LineUpgrade> = idx
        .upgrade
        .iter()
        .zip(&idx.lines)
        .filter_map(|(v, &id)| {
            let added = v.map_or(0.0, val);
            (added > SIZE_TOL).then(|| LineUpgrade {
                line: id,
                added_mw: added,
                length_km: network.line(id).map_or(0.0, |l| l.length_km),
            })
        })
        .collect();

    // Coefficients come from the model so the items sum to the objective.
    let mut costs = CostItems::default();
    for s in &idx.sites {
        if let Some(e) = s.energy {
            costs.storage_energy += x[e.0] * cost_of(e);
        }
        if let Some(p) = s.power {
            costs.storage_power += x[p.0] * cost_of(p);
        }
    }
    for (k, u) in idx.upgrade.iter().enumerate() {
        if let Some(v) = u {
            costs.line_upgrade += x[v.0] * idx.upgrade_cost[k];
        }
    }
    let mut charging_cost = 0.0;
    for t in 0..h.len() {
        let w = h.weights[t];
        costs.upstream_energy += w * idx.tariff[t] * x[idx.pi[t].0];
        costs.startup += x[idx.n[t].0] * cost_of(idx.n[t]);
        for &c in &idx.chi[t] {
            costs.lost_load += x[c.0] * cost_of(c);
        }
        for &c in &idx.charge[t] {
            costs.storage_variable += x[c.0] * cost_of(c);
            charging_cost += w * idx.tariff[t] * x[c.0];
        }
    }

    SystemDesign {
        storage,
        upgrades,
        dispatch,
        costs,
        total_cost: objective,
        charging_cost,
        solver: solver.to_string(),
        certificate: Certificate::from(report),
    }
}

fn snap(x: f64) -> f64 {
    if x < SIZE_TOL {
        0.0
    } else {
        x
    }
}

/// Builds, solves and certifies one stage design.
pub fn optimize_design(
    network: &Network,
    resources: &ResourceSet,
    demand: &LoadProfile,
    costs: &CostBook,
    options: &DispatchOptions,
) -> Result<SystemDesign> {
    let (model, idx) = build_dispatch_model(network, resources, demand, costs, options)?;
    solve_design(&model, &idx, network, options.solver)
}
