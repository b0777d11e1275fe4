use crate::error::Result;
use crate::standard::StandardFormLp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Numerical tolerances shared by the solvers and the certifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute primal feasibility, scaled by `1 + ||b||_inf`.
    pub feasibility: f64,
    /// Reduced-cost optimality threshold, scaled by `1 + |c_j|`.
    pub optimality: f64,
    /// Smallest pivot element accepted in the ratio test.
    pub pivot: f64,
    /// Complementary slackness, scaled by `1 + ||c||_inf`.
    pub complementarity: f64,
    /// Duality gap relative to `1 + |objective|`.
    pub gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-7,
            optimality: 1e-8,
            pivot: 1e-9,
            complementarity: 1e-6,
            gap: 1e-6,
        }
    }
}

/// Optimal point (when `status == Optimal`) in both model and standard-form
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    /// Values of the model variables.
    pub primal: Vec<f64>,
    /// Duals of the model constraints (d objective / d rhs).
    pub duals: Vec<f64>,
    pub std_x: Vec<f64>,
    pub std_y: Vec<f64>,
    pub iterations: usize,
    pub solver: &'static str,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub(crate) fn non_optimal(status: LpStatus, iterations: usize, solver: &'static str) -> Self {
        Self {
            status,
            objective: f64::NAN,
            primal: Vec::new(),
            duals: Vec::new(),
            std_x: Vec::new(),
            std_y: Vec::new(),
            iterations,
            solver,
        }
    }

    pub(crate) fn optimal(
        lp: &StandardFormLp,
        std_x: Vec<f64>,
        std_y: Vec<f64>,
        iterations: usize,
        solver: &'static str,
    ) -> Self {
        Self {
            status: LpStatus::Optimal,
            objective: lp.objective(&std_x),
            primal: lp.recover_primal(&std_x),
            duals: lp.recover_duals(&std_y),
            std_x,
            std_y,
            iterations,
            solver,
        }
    }
}

/// Any LP backend operating on the compiled standard form.
pub trait LpSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, lp: &StandardFormLp) -> Result<LpSolution>;
}
