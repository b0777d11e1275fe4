//! Medium-voltage feeder topology: buses, lines, loading limit, and the
//! overload diagnostic used to trigger upgrade decisions.
//!
//! Line flows are in MW and susceptances are on a 1 MVA base, so
//! `flow = susceptance * (theta_from - theta_to)` with angles in radians.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub type BusId = u32;
pub type LineId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    Substation,
    Load,
    Junction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
    /// Defaults to `kind == Load` when absent from the file.
    #[serde(default)]
    pub has_load: Option<bool>,
    #[serde(default)]
    pub storage_allowed: bool,
}

impl Bus {
    pub fn carries_load(&self) -> bool {
        self.has_load.unwrap_or(self.kind == BusKind::Load)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: LineId,
    pub from: BusId,
    pub to: BusId,
    pub susceptance_pu: f64,
    pub capacity_mw: f64,
    pub length_km: f64,
    #[serde(default = "yes")]
    pub upgradable: bool,
}

fn yes() -> bool {
    true
}

fn default_limit() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub rated_capacity_mw: f64,
    #[serde(default = "default_limit")]
    pub loading_limit_fraction: f64,
}

impl Network {
    pub fn from_json(text: &str) -> Result<Self> {
        let net: Network = serde_json::from_str(text).map_err(|e| CoreError::parse("network", e))?;
        net.validate()?;
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn substation(&self) -> &Bus {
        self.buses
            .iter()
            .find(|b| b.kind == BusKind::Substation)
            .expect("validated network has a substation")
    }

    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn line(&self, id: LineId) -> Option<&Line> {
        self.lines.iter().find(|l| l.id == id)
    }

    /// MW a line may carry before it counts as overloaded.
    pub fn line_limit(&self, line: &Line) -> f64 {
        self.loading_limit_fraction * line.capacity_mw
    }

    pub fn load_buses(&self) -> impl Iterator<Item = &Bus> {
        self.buses.iter().filter(|b| b.carries_load())
    }

    /// Lines whose `from` end is the substation.
    pub fn substation_lines(&self) -> impl Iterator<Item = &Line> {
        let s = self.substation().id;
        self.lines.iter().filter(move |l| l.from == s || l.to == s)
    }

    pub fn total_length_km(&self) -> f64 {
        self.lines.iter().map(|l| l.length_km).sum()
    }

    /// True when the graph has exactly `buses - 1` lines (a spanning tree).
    pub fn is_radial(&self) -> bool {
        self.lines.len() + 1 == self.buses.len()
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for b in &self.buses {
            if !ids.insert(b.id) {
                return Err(CoreError::validation(format!("duplicate bus id {}", b.id)));
            }
        }
        let n_sub = self.buses.iter().filter(|b| b.kind == BusKind::Substation).count();
        if n_sub != 1 {
            return Err(CoreError::validation(format!("expected exactly one substation bus, found {n_sub}")));
        }
        if !(self.loading_limit_fraction > 0.0 && self.loading_limit_fraction <= 1.0) {
            return Err(CoreError::validation("loading_limit_fraction must lie in (0, 1]"));
        }
        if !(self.rated_capacity_mw > 0.0) {
            return Err(CoreError::validation("rated_capacity_mw must be positive"));
        }
        let mut line_ids = BTreeSet::new();
        for l in &self.lines {
            if !line_ids.insert(l.id) {
                return Err(CoreError::validation(format!("duplicate line id {}", l.id)));
            }
            if !ids.contains(&l.from) || !ids.contains(&l.to) {
                return Err(CoreError::validation(format!("line {} references an unknown bus", l.id)));
            }
            if l.from == l.to {
                return Err(CoreError::validation(format!("line {} is a self-loop", l.id)));
            }
            if !(l.capacity_mw > 0.0) {
                return Err(CoreError::validation(format!("line {} capacity must be positive", l.id)));
            }
            if !(l.susceptance_pu > 0.0) {
                return Err(CoreError::validation(format!("line {} susceptance must be positive", l.id)));
            }
            if !(l.length_km >= 0.0) || !l.length_km.is_finite() {
                return Err(CoreError::validation(format!("line {} length must be finite and nonnegative", l.id)));
            }
        }

        let mut adj: HashMap<BusId, Vec<BusId>> = HashMap::new();
        for l in &self.lines {
            adj.entry(l.from).or_default().push(l.to);
            adj.entry(l.to).or_default().push(l.from);
        }
        let root = self.substation().id;
        let mut seen = BTreeSet::from([root]);
        let mut queue = VecDeque::from([root]);
        while let Some(b) = queue.pop_front() {
            for &nb in adj.get(&b).into_iter().flatten() {
                if seen.insert(nb) {
                    queue.push_back(nb);
                }
            }
        }
        if seen.len() != self.buses.len() {
            let missing: Vec<_> = ids.difference(&seen).collect();
            return Err(CoreError::validation(format!("buses {missing:?} are not connected to the substation")));
        }
        if !self.buses.iter().any(|b| b.carries_load() && b.id != root) {
            return Err(CoreError::validation("no load bus reachable from the substation"));
        }
        Ok(())
    }
}

pub fn load_network(path: &Path) -> Result<Network> {
    let text = std::fs::read_to_string(path)?;
    Network::from_json(&text).map_err(|e| match e {
        CoreError::Parse { message, .. } => CoreError::parse(path.display().to_string(), message),
        other => other,
    })
}

pub fn write_network(network: &Network, path: &Path) -> Result<()> {
    std::fs::write(path, network.to_json())?;
    Ok(())
}

/// Lines whose peak absolute flow strictly exceeds the loading limit.
pub fn overloaded_lines(network: &Network, flows: &BTreeMap<LineId, Vec<f64>>) -> Result<BTreeSet<LineId>> {
    let mut out = BTreeSet::new();
    for line in &network.lines {
        let series = flows
            .get(&line.id)
            .ok_or_else(|| CoreError::Dimension(format!("no flow series for line {}", line.id)))?;
        let peak = series.iter().fold(0.0_f64, |a, f| a.max(f.abs()));
        if peak > network.line_limit(line) {
            out.insert(line.id);
        }
    }
    Ok(out)
}
