//! Residuals of a dispatch against the network physics, recomputed from the
//! reported series alone.

use gridnwa_core::dispatch::{StorageParams, SystemDesign};
use gridnwa_core::network::Network;

#[derive(Debug, Default, Clone, Copy)]
pub struct Residuals {
    pub balance: f64,
    pub soc: f64,
    pub dc_flow: f64,
    /// Largest excess of charge plus discharge over installed power.
    pub coupling: f64,
    pub max_export: f64,
    pub min_upstream: f64,
}

pub fn residuals(network: &Network, design: &SystemDesign, st: &StorageParams) -> Residuals {
    let d = &design.dispatch;
    let sub = network.substation().id;
    let angle = |t: usize, bus: u32| d.angle_buses.iter().position(|&b| b == bus).map_or(0.0, |a| d.theta[t][a]);
    let mut r = Residuals {
        min_upstream: f64::INFINITY,
        ..Default::default()
    };
    for t in 0..d.len() {
        let prev = if t % d.period_len == 0 { t + d.period_len - 1 } else { t - 1 };
        for bus in &network.buses {
            let mut net = 0.0;
            if bus.id == sub {
                net += d.upstream[t] - d.export[t];
            }
            if let Some(k) = d.load_buses.iter().position(|&b| b == bus.id) {
                net += d.lost_load[t][k] - d.demand[t][k];
            }
            for (k, site) in design.storage.iter().enumerate() {
                if site.bus == bus.id {
                    net += d.discharge[t][k] - d.charge[t][k];
                }
            }
            for (k, l) in network.lines.iter().enumerate() {
                if l.from == bus.id {
                    net -= d.flow[t][k];
                }
                if l.to == bus.id {
                    net += d.flow[t][k];
                }
            }
            r.balance = r.balance.max(net.abs());
        }
        for (k, l) in network.lines.iter().enumerate() {
            let want = l.susceptance_pu * (angle(t, l.from) - angle(t, l.to));
            r.dc_flow = r.dc_flow.max((d.flow[t][k] - want).abs());
        }
        for (k, site) in design.storage.iter().enumerate() {
            let step = d.soc[t][k] - d.soc[prev][k] + d.discharge[t][k] / st.eta_discharge - d.charge[t][k] * st.eta_charge;
            r.soc = r.soc.max(step.abs());
            r.coupling = r.coupling.max(d.charge[t][k] + d.discharge[t][k] - site.power_mw());
        }
        r.max_export = r.max_export.max(d.export[t]);
        r.min_upstream = r.min_upstream.min(d.upstream[t]);
    }
    r
}
