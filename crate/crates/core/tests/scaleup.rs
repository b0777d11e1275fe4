use std::path::PathBuf;
use std::sync::OnceLock;

use gridnwa_core::mdp::Action;
use gridnwa_core::sample::{sample_feeder, sample_profile};
use gridnwa_core::scaleup::{
    aggregate_city, city_classes, cost_sensitivity, cost_variants_2030, read_cities, read_class_shares, ClassOutcome,
    ClassStudy, ClassStudyConfig, FeederClass,
};
use gridnwa_core::valuation::CostBook;

fn data(name: &str) -> String {
    std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)).unwrap()
}

fn delhi_classes(demand_factor: f64) -> Vec<FeederClass> {
    let shares = read_class_shares(&data("feeder_classes.csv")).unwrap();
    let mut city = read_cities(&data("cities.csv")).unwrap().into_iter().find(|c| c.city == "Delhi").unwrap();
    city.serviced_demand_twh *= demand_factor;
    city_classes(&sample_feeder(), &sample_profile(), &shares, &city).unwrap()
}

fn study() -> &'static ClassStudy {
    static STUDY: OnceLock<ClassStudy> = OnceLock::new();
    STUDY.get_or_init(|| {
        ClassStudy::new(sample_feeder(), &sample_profile(), delhi_classes(1.0), ClassStudyConfig::default()).unwrap()
    })
}

#[test]
fn city_totals_match_independent_summation() {
    let s = study();
    let book = CostBook::year_2030();
    let outcomes = s.outcomes(&book).unwrap();
    let classes: Vec<FeederClass> = s.classes.iter().map(|c| c.class.clone()).collect();
    let agg = aggregate_city("Delhi", &outcomes, &classes, 10, 30).unwrap();

    let (mut gwh, mut km, mut flex, mut trad) = (0.0, 0.0, 0.0, 0.0);
    for (o, c) in outcomes.iter().zip(&classes) {
        let ratio = c.serviced_demand_mwh / c.represented_demand_mwh;
        match o.action {
            Action::StorageNwa => {
                gwh += o.storage_energy_mwh * ratio / 1000.0;
                km += c.serviced_km;
                flex += ratio * (10.0 * o.aic_storage + 20.0 * o.aic_traditional);
                trad += ratio * 30.0 * o.aic_traditional;
            }
            Action::TraditionalUpgrade => {
                flex += ratio * 30.0 * o.aic_traditional;
                trad += ratio * 30.0 * o.aic_traditional;
            }
            Action::NoAction => {}
        }
    }
    assert!(gwh > 0.0 && km > 0.0);
    assert!((agg.storage_gwh - gwh).abs() <= 1e-9 * gwh);
    assert!((agg.deferred_km - km).abs() <= 1e-9 * km);
    assert!((agg.flexible_budget_usd - flex).abs() <= 1e-9 * flex);
    assert!((agg.traditional_budget_usd - trad).abs() <= 1e-9 * trad);
    assert!((agg.savings_fraction - (1.0 - flex / trad)).abs() <= 1e-12);
    assert!(agg.deferred_km <= agg.serviced_km);
}

#[test]
fn storage_scales_linearly_with_serviced_demand() {
    let s = study();
    let book = CostBook::year_2030();
    let outcomes = s.outcomes(&book).unwrap();
    let base = aggregate_city("x", &outcomes, &delhi_classes(1.0), 10, 30).unwrap();
    let doubled = aggregate_city("x", &outcomes, &delhi_classes(2.5), 10, 30).unwrap();
    assert!((doubled.storage_gwh - 2.5 * base.storage_gwh).abs() <= 1e-9 * doubled.storage_gwh);
}

#[test]
fn two_class_budgets_by_hand() {
    let class = |id, km| FeederClass {
        id,
        loading_fraction: 0.6,
        represented_demand_mwh: 100.0,
        serviced_demand_mwh: 300.0,
        serviced_km: km,
    };
    let outcome = |id, action, sto, trad| ClassOutcome {
        class: id,
        action,
        storage_feasible: true,
        storage_energy_mwh: if action == Action::StorageNwa { 2.0 } else { 0.0 },
        storage_power_mw: 0.5,
        upgraded_km: 1.0,
        aic_storage: sto,
        aic_traditional: trad,
        option_value: 0.0,
    };
    let agg = aggregate_city(
        "x",
        &[outcome(1, Action::StorageNwa, 10.0, 40.0), outcome(2, Action::TraditionalUpgrade, 0.0, 20.0)],
        &[class(1, 7.0), class(2, 5.0)],
        10,
        30,
    )
    .unwrap();
    // Ratio 3: class 1 pays 30 for 10 years then 120 for 20, class 2 pays 60 for 30.
    assert_eq!(agg.flexible_budget_usd, 300.0 + 2400.0 + 1800.0);
    assert_eq!(agg.traditional_budget_usd, 3600.0 + 1800.0);
    assert_eq!(agg.deferred_km, 7.0);
    assert_eq!(agg.storage_gwh, 0.006);
    assert!((agg.savings_fraction - (1.0 - 4500.0 / 5400.0)).abs() < 1e-15);
}

#[test]
fn identical_variants_give_identical_outputs() {
    let mid = CostBook::year_2030();
    let r = cost_sensitivity(study(), "Delhi", &[("a".into(), mid.clone()), ("b".into(), mid)]).unwrap();
    assert_eq!(r.variants[0].1, r.variants[1].1);
}

#[test]
fn deployment_does_not_grow_with_storage_cost() {
    let r = cost_sensitivity(study(), "Delhi", &cost_variants_2030()).unwrap();
    let gwh: Vec<f64> = r.variants.iter().map(|(_, a)| a.storage_gwh).collect();
    assert!(gwh.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{gwh:?}");
}
