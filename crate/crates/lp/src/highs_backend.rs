//! HiGHS-backed solver for standard-form problems too large for the dense
//! reference simplex (full-year hourly dispatch runs to several hundred
//! thousand rows).

use std::num::NonZeroU32;

use highs::{ColProblem, HighsModelStatus, Sense as HSense};

use crate::error::{LpError, Result};
use crate::solution::{LpSolution, LpSolver, LpStatus, Tolerances};
use crate::standard::{ColOrigin, RowOrigin, StandardFormLp};

/// HiGHS algorithm selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HighsMethod {
    Simplex,
    /// Interior point followed by crossover to a basic solution.
    Ipm,
    Choose,
}

impl HighsMethod {
    fn option(self) -> &'static str {
        match self {
            Self::Simplex => "simplex",
            Self::Ipm => "ipm",
            Self::Choose => "choose",
        }
    }
}

#[derive(Debug, Clone)]
pub struct HighsSolver {
    pub tol: Tolerances,
    pub time_limit_s: Option<f64>,
    pub method: HighsMethod,
}

impl Default for HighsSolver {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            time_limit_s: None,
            method: HighsMethod::Simplex,
        }
    }
}

/// Standard form with upper-bound rows folded into column bounds and
/// slack columns folded into row bounds.
struct Compact {
    /// HiGHS row index per standard-form row, `None` for upper-bound rows.
    row_of: Vec<Option<usize>>,
    /// Standard-form rows kept as HiGHS rows, in HiGHS order.
    kept_rows: Vec<usize>,
    /// Structural standard-form columns, in HiGHS order.
    kept_cols: Vec<usize>,
    /// Upper bound of each kept column.
    upper: Vec<f64>,
    /// `(std row, sign)` of each slack column indexed by standard-form column.
    slack: Vec<Option<(usize, f64)>>,
    /// Upper-bound row attached to each standard-form column.
    ub_row: Vec<Option<usize>>,
    /// Slack sign of each standard-form row (0 for equalities).
    row_sign: Vec<f64>,
    /// Structural column bounded by each upper-bound row.
    owner: Vec<Option<usize>>,
}

impl Compact {
    fn new(lp: &StandardFormLp) -> Self {
        let n = lp.num_cols();
        let mut slack = vec![None; n];
        let mut row_sign = vec![0.0; lp.num_rows];
        let mut ub_row = vec![None; n];
        let mut upper = vec![f64::INFINITY; n];
        let mut owner = vec![None; lp.num_rows];
        for (j, col) in lp.cols.iter().enumerate() {
            if let ColOrigin::Slack { row } = lp.col_origin[j] {
                let sign = col.first().map_or(1.0, |e| e.1);
                slack[j] = Some((row, sign));
                row_sign[row] = sign;
            }
        }
        for (j, col) in lp.cols.iter().enumerate() {
            if slack[j].is_some() {
                continue;
            }
            for &(i, a) in col {
                if matches!(lp.row_origin[i], RowOrigin::UpperBound(_)) {
                    ub_row[j] = Some(i);
                    owner[i] = Some(j);
                    upper[j] = lp.b[i] / a;
                }
            }
        }
        let mut row_of = vec![None; lp.num_rows];
        let mut kept_rows = Vec::new();
        for i in 0..lp.num_rows {
            if matches!(lp.row_origin[i], RowOrigin::Constraint(_)) {
                row_of[i] = Some(kept_rows.len());
                kept_rows.push(i);
            }
        }
        let kept_cols: Vec<usize> = (0..n).filter(|&j| slack[j].is_none()).collect();
        let upper = kept_cols.iter().map(|&j| upper[j]).collect();
        Self {
            row_of,
            kept_rows,
            kept_cols,
            upper,
            slack,
            ub_row,
            row_sign,
            owner,
        }
    }

    /// Standard-form `(x, y)` from HiGHS column values, row activities,
    /// row duals and column duals.
    fn expand(&self, lp: &StandardFormLp, cols: &[f64], rows: &[f64], row_duals: &[f64], col_duals: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut x = vec![0.0; lp.num_cols()];
        let mut y = vec![0.0; lp.num_rows];
        for (k, &j) in self.kept_cols.iter().enumerate() {
            x[j] = cols[k];
            if let Some(i) = self.ub_row[j] {
                y[i] = col_duals[k].min(0.0);
            }
        }
        for (k, &i) in self.kept_rows.iter().enumerate() {
            y[i] = row_duals[k];
        }
        for (j, s) in self.slack.iter().enumerate() {
            if let Some((i, sign)) = *s {
                let activity = match self.row_of[i] {
                    Some(k) => rows[k],
                    None => self.owner[i].map_or(0.0, |j| lp.cols[j].iter().find(|e| e.0 == i).map_or(0.0, |e| e.1) * x[j]),
                };
                x[j] = ((lp.b[i] - activity) / sign).max(0.0);
            }
        }
        (x, y)
    }
}

impl LpSolver for HighsSolver {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn solve(&self, lp: &StandardFormLp) -> Result<LpSolution> {
        let compact = Compact::new(lp);
        let mut pb = ColProblem::default();
        let rows: Vec<_> = compact
            .kept_rows
            .iter()
            .map(|&i| {
                let b = lp.b[i];
                match compact.row_sign[i] {
                    s if s > 0.0 => pb.add_row(..=b),
                    s if s < 0.0 => pb.add_row(b..),
                    _ => pb.add_row(b..=b),
                }
            })
            .collect();
        for (k, &j) in compact.kept_cols.iter().enumerate() {
            let entries = lp.cols[j]
                .iter()
                .filter_map(|&(i, a)| compact.row_of[i].map(|r| (rows[r], a)));
            let u = compact.upper[k];
            if u.is_finite() {
                pb.add_column(lp.c[j], 0.0..=u, entries);
            } else {
                pb.add_column(lp.c[j], 0.0.., entries);
            }
        }

        let mut model = pb.optimise(HSense::Minimise);
        model.make_quiet();
        model.set_threads(NonZeroU32::new(1).expect("nonzero"));
        // A fixed seed and a single thread keep runs bit-reproducible.
        model.set_option("random_seed", 0);
        model.set_option("solver", self.method.option());
        model.set_option("primal_feasibility_tolerance", (self.tol.feasibility * 1e-2).max(1e-10));
        model.set_option("dual_feasibility_tolerance", (self.tol.optimality * 1e-1).max(1e-10));
        if let Some(t) = self.time_limit_s {
            model.set_option("time_limit", t);
        }

        let solved = model
            .try_solve()
            .map_err(|e| LpError::Backend(format!("{e:?}")))?;
        let iterations = solved.simplex_iteration_count().max(0) as usize;
        match solved.status() {
            HighsModelStatus::Optimal => {
                let sol = solved.get_solution();
                let (x, y) = compact.expand(lp, sol.columns(), sol.rows(), sol.dual_rows(), sol.dual_columns());
                Ok(LpSolution::optimal(lp, x, y, iterations, self.name()))
            }
            HighsModelStatus::ModelEmpty => Ok(LpSolution::optimal(
                lp,
                vec![0.0; lp.num_cols()],
                vec![0.0; lp.num_rows],
                0,
                self.name(),
            )),
            HighsModelStatus::Infeasible => Ok(LpSolution::non_optimal(LpStatus::Infeasible, iterations, self.name())),
            HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => {
                Ok(LpSolution::non_optimal(LpStatus::Unbounded, iterations, self.name()))
            }
            HighsModelStatus::ReachedIterationLimit | HighsModelStatus::ReachedTimeLimit => {
                Err(LpError::IterationLimit {
                    limit: iterations,
                    phase: 2,
                    objective: solved.objective_value(),
                })
            }
            other => Err(LpError::Backend(format!("HiGHS returned {other:?}"))),
        }
    }
}
