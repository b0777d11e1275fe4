//! Hourly capacity-expansion and dispatch LP for one planning stage.
//!
//! Units: power in MW, energy in MWh, angles in radians, costs in USD/yr.
//! Every hourly cost is multiplied by the step weight.

use gridnwa_lp::{LpModel, Sense, VarId};

use super::params::{DispatchOptions, Horizon, LoadProfile, ResourceSet, StorageUnit};
use crate::error::{CoreError, Result};
use crate::network::{BusId, LineId, Network};
use crate::valuation::CostBook;

/// A storage site: one bus, optional new capacity on top of existing units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteVars {
    pub bus: BusId,
    pub existing_power_mw: f64,
    pub existing_energy_mwh: f64,
    /// New energy and power, absent when investment is disabled.
    pub energy: Option<VarId>,
    pub power: Option<VarId>,
}

/// Variable layout of a built model; `[t][k]` indexing throughout.
#[derive(Debug, Clone)]
pub struct ModelIndex {
    pub horizon: Horizon,
    /// Load-bus ids with the per-step demand served at each.
    pub load_buses: Vec<BusId>,
    pub demand: Vec<Vec<f64>>,
    pub sites: Vec<SiteVars>,
    pub lines: Vec<LineId>,
    /// Effective MW limit per line before upgrades.
    pub line_limits: Vec<f64>,
    /// `C^Phi` per line, USD/MW-yr.
    pub upgrade_cost: Vec<f64>,
    pub upgrade: Vec<Option<VarId>>,
    /// Buses whose angle is a variable (all but the substation).
    pub angle_buses: Vec<BusId>,
    pub pi: Vec<VarId>,
    pub export: Vec<Option<VarId>>,
    pub v: Vec<VarId>,
    pub u: Vec<VarId>,
    pub n: Vec<VarId>,
    pub chi: Vec<Vec<VarId>>,
    pub flow: Vec<Vec<VarId>>,
    pub theta: Vec<Vec<VarId>>,
    pub charge: Vec<Vec<VarId>>,
    pub discharge: Vec<Vec<VarId>>,
    pub soc: Vec<Vec<VarId>>,
    /// Energy price per step, USD/MWh.
    pub tariff: Vec<f64>,
    /// Rows of the nodal balance, `[t][bus index]`.
    pub balance_rows: Vec<Vec<usize>>,
}

/// Annualized reconductoring cost of one MW of extra capacity on a line.
pub fn line_upgrade_cost(length_km: f64, capacity_mw: f64, book: &CostBook) -> f64 {
    book.reconductoring_usd_per_km * length_km / capacity_mw * book.line_crf()
}

fn storage_candidates(network: &Network, options: &DispatchOptions) -> Vec<BusId> {
    let sub = network.substation().id;
    network
        .buses
        .iter()
        .filter(|b| b.id != sub)
        .filter(|b| !options.india_mode || options.relax_storage_sites || b.storage_allowed)
        .map(|b| b.id)
        .collect()
}

pub fn build_dispatch_model(
    network: &Network,
    resources: &ResourceSet,
    demand: &LoadProfile,
    costs: &CostBook,
    options: &DispatchOptions,
) -> Result<(LpModel, ModelIndex)> {
    network.validate()?;
    demand.validate(network)?;
    resources.storage.validate()?;
    resources.upstream.validate()?;
    costs.validate()?;
    options.validate()?;
    let horizon = Horizon::from_mode(options.horizon, &demand.total())?;
    horizon.validate(demand.n_hours())?;

    for &id in options.line_capacity_mw.keys() {
        if network.line(id).is_none() {
            return Err(CoreError::validation(format!("capacity override for unknown line {id}")));
        }
    }
    let candidates = storage_candidates(network, options);
    if options.allow_storage && candidates.is_empty() && !options.allow_upgrades {
        return Err(CoreError::validation(
            "storage is allowed at no bus and line upgrades are disabled",
        ));
    }
    for unit in &options.existing_storage {
        if network.bus_index(unit.bus).is_none() || unit.bus == network.substation().id {
            return Err(CoreError::validation(format!("existing storage at invalid bus {}", unit.bus)));
        }
    }

    let mut sites: Vec<SiteVars> = Vec::new();
    let mut site_buses: Vec<BusId> = candidates.clone();
    for u in &options.existing_storage {
        if !site_buses.contains(&u.bus) {
            site_buses.push(u.bus);
        }
    }
    site_buses.sort_unstable();

    let st = &resources.storage;
    let up = &resources.upstream;
    let mut m = LpModel::new();

    for &bus in &site_buses {
        let existing: Vec<&StorageUnit> = options.existing_storage.iter().filter(|u| u.bus == bus).collect();
        let investable = options.allow_storage && candidates.contains(&bus);
        let (energy, power) = if investable {
            (
                Some(m.add_var(
                    format!("E_new[{bus}]"),
                    0.0,
                    f64::INFINITY,
                    (st.energy_cost + st.energy_fixed_cost) * (1.0 + st.degradation),
                )),
                Some(m.add_var(format!("P_new[{bus}]"), 0.0, f64::INFINITY, st.power_cost + st.power_fixed_cost)),
            )
        } else {
            (None, None)
        };
        let site = SiteVars {
            bus,
            existing_power_mw: existing.iter().map(|u| u.power_mw).sum(),
            existing_energy_mwh: existing.iter().map(|u| u.energy_mwh).sum(),
            energy,
            power,
        };
        if investable || site.existing_power_mw > 0.0 {
            sites.push(site);
        }
    }

    let sub = network.substation().id;
    let mut lines = Vec::new();
    let mut line_limits = Vec::new();
    let mut upgrade_cost = Vec::new();
    let mut upgrade = Vec::new();
    for l in &network.lines {
        let cap = options.line_capacity_mw.get(&l.id).copied().unwrap_or(l.capacity_mw);
        let cost = line_upgrade_cost(l.length_km, cap, costs);
        lines.push(l.id);
        line_limits.push(network.loading_limit_fraction * cap);
        upgrade_cost.push(cost);
        upgrade.push(
            (options.allow_upgrades && l.upgradable).then(|| m.add_var(format!("dPhi[{}]", l.id), 0.0, f64::INFINITY, cost)),
        );
    }

    let load_buses: Vec<BusId> = network.load_buses().map(|b| b.id).filter(|&b| b != sub).collect();
    let angle_buses: Vec<BusId> = network.buses.iter().map(|b| b.id).filter(|&b| b != sub).collect();
    let n_steps = horizon.len();
    let demand_at: Vec<Vec<f64>> = (0..n_steps)
        .map(|t| {
            load_buses
                .iter()
                .map(|&b| demand.bus_series(b).map_or(0.0, |s| s[horizon.hours[t]]))
                .collect()
        })
        .collect();
    for &b in &demand.buses {
        if b == sub {
            return Err(CoreError::validation("demand at the substation bus is not modeled"));
        }
    }

    let tariff: Vec<f64> = (0..n_steps).map(|t| costs.tariff(horizon.hour_of_day(t))).collect();
    let units = up.capacity_mw / up.unit_mw;
    let mut idx = ModelIndex {
        horizon: horizon.clone(),
        load_buses: load_buses.clone(),
        demand: demand_at,
        sites: sites.clone(),
        lines,
        line_limits,
        upgrade_cost,
        upgrade,
        angle_buses: angle_buses.clone(),
        pi: Vec::with_capacity(n_steps),
        export: Vec::with_capacity(n_steps),
        v: Vec::with_capacity(n_steps),
        u: Vec::with_capacity(n_steps),
        n: Vec::with_capacity(n_steps),
        chi: Vec::with_capacity(n_steps),
        flow: Vec::with_capacity(n_steps),
        theta: Vec::with_capacity(n_steps),
        charge: Vec::with_capacity(n_steps),
        discharge: Vec::with_capacity(n_steps),
        soc: Vec::with_capacity(n_steps),
        tariff,
        balance_rows: Vec::with_capacity(n_steps),
    };

    for t in 0..n_steps {
        let w = horizon.weights[t];
        idx.pi.push(m.add_var(format!("pi[{t}]"), 0.0, up.capacity_mw, w * idx.tariff[t]));
        idx.export
            .push((!options.india_mode).then(|| m.add_var(format!("export[{t}]"), 0.0, f64::INFINITY, 0.0)));
        idx.v.push(m.add_var(format!("v[{t}]"), 0.0, units, 0.0));
        idx.u.push(m.add_var(format!("u[{t}]"), 0.0, units, 0.0));
        idx.n.push(m.add_var(format!("n[{t}]"), 0.0, units, w * up.startup_cost));
        idx.chi.push(
            load_buses
                .iter()
                .zip(&idx.demand[t])
                .map(|(b, &l)| m.add_var(format!("chi[{t},{b}]"), 0.0, l, w * options.voll_usd_per_mwh))
                .collect(),
        );
        idx.flow.push(
            network
                .lines
                .iter()
                .enumerate()
                .map(|(k, l)| {
                    let lim = if idx.upgrade[k].is_some() { f64::INFINITY } else { idx.line_limits[k] };
                    m.add_var(format!("phi[{t},{}]", l.id), -lim, lim, 0.0)
                })
                .collect(),
        );
        idx.theta.push(
            angle_buses
                .iter()
                .map(|b| m.add_var(format!("theta[{t},{b}]"), -options.theta_max_rad, options.theta_max_rad, 0.0))
                .collect(),
        );
        let mut ch = Vec::new();
        let mut dis = Vec::new();
        let mut soc = Vec::new();
        for s in &sites {
            ch.push(m.add_var(format!("psi_c[{t},{}]", s.bus), 0.0, f64::INFINITY, w * st.variable_cost));
            dis.push(m.add_var(format!("psi_d[{t},{}]", s.bus), 0.0, f64::INFINITY, 0.0));
            soc.push(m.add_var(format!("soc[{t},{}]", s.bus), 0.0, f64::INFINITY, 0.0));
        }
        idx.charge.push(ch);
        idx.discharge.push(dis);
        idx.soc.push(soc);
    }

    let bus_pos = |id: BusId| network.bus_index(id).expect("validated bus");
    for t in 0..n_steps {
        let p = horizon.prev(t);

        // Nodal balance.
        let mut terms: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); network.buses.len()];
        let mut rhs = vec![0.0; network.buses.len()];
        let s = bus_pos(sub);
        terms[s].push((idx.pi[t], 1.0));
        if let Some(e) = idx.export[t] {
            terms[s].push((e, -1.0));
        }
        for (k, &b) in load_buses.iter().enumerate() {
            terms[bus_pos(b)].push((idx.chi[t][k], 1.0));
            rhs[bus_pos(b)] += idx.demand[t][k];
        }
        for (k, site) in sites.iter().enumerate() {
            let i = bus_pos(site.bus);
            terms[i].push((idx.discharge[t][k], 1.0));
            terms[i].push((idx.charge[t][k], -1.0));
        }
        for (k, l) in network.lines.iter().enumerate() {
            terms[bus_pos(l.to)].push((idx.flow[t][k], 1.0));
            terms[bus_pos(l.from)].push((idx.flow[t][k], -1.0));
        }
        let mut rows = Vec::with_capacity(network.buses.len());
        for (i, (tm, r)) in terms.into_iter().zip(rhs).enumerate() {
            rows.push(m.num_constraints());
            m.add_constraint(format!("dem[{t},{}]", network.buses[i].id), tm, Sense::Eq, r);
        }
        idx.balance_rows.push(rows);

        // DC flow and limits.
        for (k, l) in network.lines.iter().enumerate() {
            let mut tm = vec![(idx.flow[t][k], 1.0)];
            if let Some(a) = angle_buses.iter().position(|&b| b == l.from) {
                tm.push((idx.theta[t][a], -l.susceptance_pu));
            }
            if let Some(a) = angle_buses.iter().position(|&b| b == l.to) {
                tm.push((idx.theta[t][a], l.susceptance_pu));
            }
            m.add_constraint(format!("net1[{t},{}]", l.id), tm, Sense::Eq, 0.0);
            if let Some(d) = idx.upgrade[k] {
                let lim = idx.line_limits[k];
                m.add_constraint(format!("net2[{t},{}]", l.id), [(idx.flow[t][k], 1.0), (d, -1.0)], Sense::Le, lim);
                m.add_constraint(format!("net3[{t},{}]", l.id), [(idx.flow[t][k], -1.0), (d, -1.0)], Sense::Le, lim);
            }
        }

        // Storage.
        for (k, site) in sites.iter().enumerate() {
            let (c, d, g, gp) = (idx.charge[t][k], idx.discharge[t][k], idx.soc[t][k], idx.soc[p][k]);
            m.add_constraint(
                format!("stor1[{t},{}]", site.bus),
                [(g, 1.0), (gp, -1.0), (d, 1.0 / st.eta_discharge), (c, -st.eta_charge)],
                Sense::Eq,
                0.0,
            );
            let mut cap = vec![(g, 1.0)];
            if let Some(e) = site.energy {
                cap.push((e, -st.depth_of_discharge));
            }
            m.add_constraint(
                format!("stor5[{t},{}]", site.bus),
                cap,
                Sense::Le,
                st.depth_of_discharge * site.existing_energy_mwh,
            );
            let mut c_only = vec![(c, 1.0)];
            let mut both = vec![(c, 1.0), (d, 1.0)];
            if let Some(pw) = site.power {
                c_only.push((pw, -1.0));
                both.push((pw, -1.0));
            }
            m.add_constraint(format!("stor3[{t},{}]", site.bus), c_only, Sense::Le, site.existing_power_mw);
            m.add_constraint(format!("stor31[{t},{}]", site.bus), both, Sense::Le, site.existing_power_mw);
            m.add_constraint(format!("stor4[{t},{}]", site.bus), [(d, 1.0), (gp, -1.0)], Sense::Le, 0.0);
        }

        // Relaxed commitment, output range and ramps of upstream supply.
        m.add_constraint(
            format!("therm1[{t}]"),
            [(idx.v[t], 1.0), (idx.v[p], -1.0), (idx.u[t], -1.0), (idx.n[t], 1.0)],
            Sense::Eq,
            0.0,
        );
        m.add_constraint(
            format!("therm2[{t}]"),
            [(idx.pi[t], 1.0), (idx.v[t], -up.rho_min * up.unit_mw)],
            Sense::Ge,
            0.0,
        );
        m.add_constraint(
            format!("therm3[{t}]"),
            [(idx.pi[t], 1.0), (idx.v[t], -up.rho_max * up.unit_mw)],
            Sense::Le,
            0.0,
        );
        m.add_constraint(
            format!("therm4[{t}]"),
            [(idx.pi[t], 1.0), (idx.pi[p], -1.0)],
            Sense::Le,
            up.ramp_up * up.capacity_mw,
        );
        m.add_constraint(
            format!("therm5[{t}]"),
            [(idx.pi[p], 1.0), (idx.pi[t], -1.0)],
            Sense::Le,
            up.ramp_down * up.capacity_mw,
        );
    }

    Ok((m, idx))
}
