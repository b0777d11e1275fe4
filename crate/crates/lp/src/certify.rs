//! Optimality certificate for a standard-form solution: primal residual,
//! dual feasibility of the reduced costs, complementary slackness and the
//! primal-dual gap.

use crate::solution::{LpSolution, Tolerances};
use crate::standard::StandardFormLp;

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport {
    /// `||A x - b||_inf`
    pub primal_residual: f64,
    /// Largest negative entry of `x`, as a positive number.
    pub bound_violation: f64,
    /// Largest negative reduced cost, as a positive number.
    pub dual_residual: f64,
    /// `max_j |x_j d_j|`
    pub complementarity: f64,
    /// `|c·x - b·y|`
    pub duality_gap: f64,
    pub objective: f64,
    pub passed: bool,
}

impl CertificationReport {
    fn failed(objective: f64) -> Self {
        Self {
            primal_residual: f64::INFINITY,
            bound_violation: f64::INFINITY,
            dual_residual: f64::INFINITY,
            complementarity: f64::INFINITY,
            duality_gap: f64::INFINITY,
            objective,
            passed: false,
        }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Certifies `sol` against `lp` with the given tolerances. A non-optimal
/// solution never passes.
pub fn certify_with(lp: &StandardFormLp, sol: &LpSolution, tol: &Tolerances) -> CertificationReport {
    if !sol.is_optimal() || sol.std_x.len() != lp.num_cols() || sol.std_y.len() != lp.num_rows {
        return CertificationReport::failed(sol.objective);
    }
    let x = &sol.std_x;
    let y = &sol.std_y;

    let primal_residual = inf_norm(&lp.residual(x));
    let bound_violation = x.iter().fold(0.0_f64, |a, &v| a.max(-v));
    let d = lp.reduced_costs(y);
    let dual_residual = d.iter().fold(0.0_f64, |a, &v| a.max(-v));
    let complementarity = x.iter().zip(&d).fold(0.0_f64, |a, (xi, di)| a.max((xi * di).abs()));
    let primal_obj: f64 = lp.c.iter().zip(x).map(|(c, x)| c * x).sum();
    let dual_obj: f64 = lp.b.iter().zip(y).map(|(b, y)| b * y).sum();
    let duality_gap = (primal_obj - dual_obj).abs();

    let b_scale = 1.0 + inf_norm(&lp.b);
    let c_scale = 1.0 + inf_norm(&lp.c);
    let objective = lp.objective(x);
    let passed = primal_residual <= tol.feasibility * b_scale
        && bound_violation <= tol.feasibility * b_scale
        && dual_residual <= tol.optimality * c_scale
        && complementarity <= tol.complementarity * c_scale
        && duality_gap <= tol.gap * (1.0 + primal_obj.abs());

    CertificationReport {
        primal_residual,
        bound_violation,
        dual_residual,
        complementarity,
        duality_gap,
        objective,
        passed,
    }
}

pub fn certify(lp: &StandardFormLp, sol: &LpSolution) -> CertificationReport {
    certify_with(lp, sol, &Tolerances::default())
}
