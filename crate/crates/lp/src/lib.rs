//! Linear programming for the dispatch models: a sparse model container,
//! a standard-form compiler, a dense Bland's-rule revised simplex used as the
//! reference solver, a HiGHS backend for full-year problems, and an
//! optimality certifier that checks any backend's output.

pub mod certify;
pub mod error;
pub mod highs_backend;
pub mod model;
pub mod mps;
pub mod simplex;
pub mod solution;
pub mod standard;

pub use certify::{certify, certify_with, CertificationReport};
pub use error::{LpError, Result};
pub use highs_backend::{HighsMethod, HighsSolver};
pub use model::{ConId, Constraint, LpModel, Sense, VarId, Variable};
pub use mps::{read_mps, write_mps};
pub use simplex::BlandSimplex;
pub use solution::{LpSolution, LpSolver, LpStatus, Tolerances};
pub use standard::{compile_standard_form, StandardFormLp};

/// Compiles `model`, solves it with `solver` and certifies the result.
pub fn solve_model(model: &LpModel, solver: &dyn LpSolver) -> Result<(LpSolution, CertificationReport)> {
    let sf = compile_standard_form(model)?;
    let sol = solver.solve(&sf)?;
    let rep = certify(&sf, &sol);
    Ok((sol, rep))
}
