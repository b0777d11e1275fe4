//! Sequential planning under demand-growth uncertainty.

mod plan;
mod solver;

pub use plan::*;
pub use solver::*;
