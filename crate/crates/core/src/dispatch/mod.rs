//! Stage system design: storage siting and sizing, line upgrades and
//! hourly dispatch from one certified LP solve.

mod build;
mod design;
mod params;
mod report;

pub use build::{build_dispatch_model, line_upgrade_cost, ModelIndex, SiteVars};
pub use design::{
    optimize_design, solve_design, Certificate, CostItems, Dispatch, LineUpgrade, StorageSite, SystemDesign, SIZE_TOL,
};
pub use params::{
    upstream_supply, DispatchOptions, Horizon, HorizonMode, LoadProfile, ResourceSet, SolverChoice, StorageParams,
    StorageUnit, UpstreamSupply, AUTO_REFERENCE_ROWS, HOURS_PER_YEAR,
};
pub use report::{dispatch_report, write_dispatch_csv, DispatchRow};
