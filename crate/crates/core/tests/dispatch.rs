#[path = "support/physics.rs"]
mod physics;

use gridnwa_core::dispatch::{
    optimize_design, upstream_supply, DispatchOptions, HorizonMode, LoadProfile, ResourceSet, StorageParams,
    StorageUnit, SystemDesign, HOURS_PER_YEAR,
};
use gridnwa_core::network::{Bus, BusKind, Line, Network};
use gridnwa_core::sample::{sample_feeder, sample_profile};
use gridnwa_core::valuation::CostBook;

const TOL: f64 = 1e-7;

fn two_bus(capacity_mw: f64) -> Network {
    Network {
        buses: vec![
            Bus {
                id: 0,
                kind: BusKind::Substation,
                has_load: None,
                storage_allowed: false,
            },
            Bus {
                id: 1,
                kind: BusKind::Load,
                has_load: None,
                storage_allowed: true,
            },
        ],
        lines: vec![Line {
            id: 0,
            from: 0,
            to: 1,
            susceptance_pu: 20.0,
            capacity_mw: capacity_mw,
            length_km: 2.0,
            upgradable: true,
        }],
        rated_capacity_mw: capacity_mw,
        loading_limit_fraction: 0.9,
    }
}

/// 0.6 MW all day with a four-hour 1.0 MW evening block.
fn block_profile() -> LoadProfile {
    let series = (0..HOURS_PER_YEAR).map(|h| if (18..22).contains(&(h % 24)) { 1.0 } else { 0.6 }).collect();
    LoadProfile {
        buses: vec![1],
        series: vec![series],
    }
}

fn solve(network: &Network, profile: &LoadProfile, options: DispatchOptions) -> (SystemDesign, StorageParams) {
    let costs = CostBook::year_2030();
    let resources = ResourceSet {
        storage: StorageParams::from_costbook(&costs),
        upstream: upstream_supply(&profile.total(), 2.0).unwrap(),
    };
    let options = DispatchOptions {
        horizon: HorizonMode::RepresentativeWeeks { seasons: 4 },
        ..options
    };
    let design = optimize_design(network, &resources, profile, &costs, &options).unwrap();
    assert!(design.certificate.passed);
    (design, resources.storage)
}

fn assert_physics(network: &Network, design: &SystemDesign, st: &StorageParams) {
    let r = physics::residuals(network, design, st);
    assert!(r.balance <= TOL, "{r:?}");
    assert!(r.soc <= TOL, "{r:?}");
    assert!(r.dc_flow <= TOL, "{r:?}");
    assert!(r.coupling <= TOL, "{r:?}");
    assert!(r.max_export <= TOL && r.min_upstream >= -TOL, "{r:?}");
}

#[test]
fn unconstrained_feeder_needs_nothing() {
    let net = two_bus(2.0);
    let (d, st) = solve(&net, &block_profile(), DispatchOptions::default());
    assert!(!d.has_investment());
    assert_eq!(d.costs.line_upgrade, 0.0);
    assert!(d.dispatch.max_lost_load_mw() <= TOL);
    for t in 0..d.dispatch.len() {
        assert!((d.dispatch.substation_flow(t) - d.dispatch.demand[t][0]).abs() <= TOL);
    }
    assert_physics(&net, &d, &st);
}

#[test]
fn storage_covers_the_evening_block_exactly() {
    let net = two_bus(1.0);
    let options = DispatchOptions {
        allow_upgrades: false,
        ..DispatchOptions::default()
    };
    let (d, st) = solve(&net, &block_profile(), options);
    // 0.1 MW above the 0.9 MW limit for four hours, drawn through the
    // discharge efficiency.
    assert!((d.new_power_mw() - 0.1).abs() < 1e-6, "{}", d.new_power_mw());
    assert!((d.new_energy_mwh() - 0.4 / st.eta_discharge).abs() < 1e-6, "{}", d.new_energy_mwh());
    assert!(d.dispatch.max_lost_load_mw() <= TOL);
    assert!((0..d.dispatch.len()).all(|t| d.dispatch.substation_flow(t) <= 0.9 + TOL));
    assert_physics(&net, &d, &st);
}

#[test]
fn upgrade_covers_the_overload_exactly() {
    let net = two_bus(1.0);
    let options = DispatchOptions {
        allow_storage: false,
        ..DispatchOptions::default()
    };
    let (d, st) = solve(&net, &block_profile(), options);
    assert_eq!(d.upgrades.len(), 1);
    assert!((d.upgrades[0].added_mw - 0.1).abs() < 1e-6);
    assert_eq!(d.upgraded_km(), 2.0);
    assert_eq!(d.new_energy_mwh(), 0.0);
    assert_physics(&net, &d, &st);
}

#[test]
fn existing_only_sheds_the_overload() {
    let net = two_bus(1.0);
    let (d, _) = solve(&net, &block_profile(), DispatchOptions::default().existing_only());
    assert!((d.dispatch.max_lost_load_mw() - 0.1).abs() < 1e-6);
    assert!((d.dispatch.total_lost_load_mwh() - 0.4 * 365.0).abs() < 1e-3);
}

#[test]
fn existing_storage_is_used_before_new_capacity() {
    let net = two_bus(1.0);
    let options = DispatchOptions {
        allow_upgrades: false,
        existing_storage: vec![StorageUnit {
            bus: 1,
            power_mw: 0.2,
            energy_mwh: 1.0,
        }],
        ..DispatchOptions::default()
    };
    let (d, st) = solve(&net, &block_profile(), options);
    assert!(d.new_power_mw() < 1e-9 && d.new_energy_mwh() < 1e-9);
    assert!(d.dispatch.max_lost_load_mw() <= TOL);
    assert_physics(&net, &d, &st);
}

#[test]
fn sample_feeder_representative_weeks_respect_physics() {
    let net = sample_feeder();
    let profile = sample_profile().scaled(1.9);
    let (d, st) = solve(&net, &profile, DispatchOptions::default());
    assert!(d.has_investment());
    assert_physics(&net, &d, &st);
}

#[test]
fn india_mode_off_still_balances() {
    let net = sample_feeder();
    let options = DispatchOptions {
        india_mode: false,
        ..DispatchOptions::default()
    };
    let (d, st) = solve(&net, &sample_profile().scaled(1.9), options);
    let r = physics::residuals(&net, &d, &st);
    assert!(r.balance <= TOL && r.soc <= TOL && r.dc_flow <= TOL, "{r:?}");
}
