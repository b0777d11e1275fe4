use serde::Serialize;

use super::design::SystemDesign;
use crate::error::Result;

/// One step of the hourly dispatch table. Storage columns sum over sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispatchRow {
    pub step: usize,
    pub hour: usize,
    pub weight_h: f64,
    pub load_mw: f64,
    pub substation_mw: f64,
    pub charge_mw: f64,
    pub discharge_mw: f64,
    pub soc_mwh: f64,
    pub lost_load_mw: f64,
}

pub fn dispatch_report(design: &SystemDesign) -> Vec<DispatchRow> {
    let d = &design.dispatch;
    (0..d.len())
        .map(|t| DispatchRow {
            step: t,
            hour: d.hours[t],
            weight_h: d.weights[t],
            load_mw: d.demand[t].iter().sum(),
            substation_mw: d.substation_flow(t),
            charge_mw: d.charge[t].iter().sum(),
            discharge_mw: d.discharge[t].iter().sum(),
            soc_mwh: d.soc[t].iter().sum(),
            lost_load_mw: d.lost_load[t].iter().sum(),
        })
        .collect()
}

/// CSV with unit-suffixed headers.
pub fn write_dispatch_csv(rows: &[DispatchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| crate::error::CoreError::parse("dispatch csv", e))?;
    }
    let bytes = w.into_inner().map_err(|e| crate::error::CoreError::parse("dispatch csv", e))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}
