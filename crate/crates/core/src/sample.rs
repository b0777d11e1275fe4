//! Stand-in feeder and hourly demand used by the examples, the CLI defaults
//! and the acceptance suite. Representative of a Delhi urban feeder, not a
//! reconstruction of any published network.
//!
//! Topology: substation (0) -> feeder head (1) over a 1 MW, 3 km trunk; the
//! head serves residential (2, storage allowed), commercial (3) and
//! industrial (4) branches. Base-year demand peaks at 50% of the trunk rating.

use std::f64::consts::PI;

use crate::dispatch::{LoadProfile, HOURS_PER_YEAR};
use crate::network::{Bus, BusKind, Line, Network};

pub const BASE_YEAR: i32 = 2020;
pub const BASE_PEAK_MW: f64 = 0.5;
pub const TRUNK_LINE: u32 = 0;

pub fn sample_feeder() -> Network {
    let bus = |id, kind, storage_allowed| Bus {
        id,
        kind,
        has_load: None,
        storage_allowed,
    };
    let line = |id, from, to, capacity_mw, length_km| Line {
        id,
        from,
        to,
        susceptance_pu: 50.0,
        capacity_mw,
        length_km,
        upgradable: true,
    };
    Network {
        buses: vec![
            bus(0, BusKind::Substation, false),
            bus(1, BusKind::Junction, false),
            bus(2, BusKind::Load, true),
            bus(3, BusKind::Load, false),
            bus(4, BusKind::Load, false),
        ],
        lines: vec![
            line(TRUNK_LINE, 0, 1, 1.0, 3.0),
            line(1, 1, 2, 1.5, 1.2),
            line(2, 1, 3, 1.0, 0.8),
            line(3, 1, 4, 1.0, 1.0),
        ],
        rated_capacity_mw: 1.0,
        loading_limit_fraction: 0.9,
    }
}

/// Evening plateau from 19:00 to midnight; commercial and industrial load
/// stay high through the evening.
const RESIDENTIAL: [f64; 24] = [
    0.95, 0.80, 0.65, 0.57, 0.53, 0.52, 0.55, 0.60, 0.62, 0.62, 0.63, 0.65, 0.67, 0.68, 0.68, 0.68, 0.70, 0.80,
    0.97, 1.00, 1.00, 1.00, 1.00, 1.00,
];
const COMMERCIAL: [f64; 24] = [
    0.55, 0.45, 0.40, 0.38, 0.38, 0.40, 0.45, 0.55, 0.70, 0.85, 0.92, 0.95, 0.95, 0.95, 0.95, 0.95, 0.93, 0.92,
    0.92, 0.92, 0.92, 0.92, 0.90, 0.75,
];
const INDUSTRIAL: [f64; 24] = [
    0.85, 0.80, 0.80, 0.80, 0.80, 0.85, 0.90, 0.95, 1.00, 1.00, 1.00, 1.00, 1.00, 1.00, 1.00, 1.00, 1.00, 0.95,
    0.92, 0.92, 0.92, 0.92, 0.92, 0.90,
];
const SHARES: [f64; 3] = [0.55, 0.25, 0.20];

/// Cooling-driven seasonal factor, flat at 1 for about seven weeks around
/// mid June.
fn season(day: usize) -> f64 {
    (0.70 + 0.33 * (2.0 * PI * (day as f64 - 166.0) / 365.0).cos()).min(1.0)
}

/// Hourly base-year demand per load bus, scaled so the feeder peak is
/// `BASE_PEAK_MW`.
pub fn sample_profile() -> LoadProfile {
    let mut series = vec![Vec::with_capacity(HOURS_PER_YEAR); 3];
    for h in 0..HOURS_PER_YEAR {
        let (day, hod) = (h / 24, h % 24);
        let s = season(day);
        // Commercial load dips on the seventh day of each week.
        let weekend = if day % 7 == 6 { 0.85 } else { 1.0 };
        // Cooling swings residential load more than the others.
        series[0].push(SHARES[0] * RESIDENTIAL[hod] * s);
        series[1].push(SHARES[1] * COMMERCIAL[hod] * (0.5 + 0.5 * s) * weekend);
        series[2].push(SHARES[2] * INDUSTRIAL[hod] * (0.8 + 0.2 * s));
    }
    let raw = LoadProfile {
        buses: vec![2, 3, 4],
        series,
    };
    let peak = raw.peak();
    raw.scaled(BASE_PEAK_MW / peak)
}
