//! Dense two-phase revised simplex with Bland's anti-cycling rule.
//!
//! The basis inverse is kept explicitly and updated by elementary row
//! operations, with a full Gauss-Jordan refactorization at a fixed cadence.
//! Pricing walks the sparse columns of the standard form. Entering and
//! leaving choices follow Bland's rule (lowest index), which makes every
//! run deterministic and immune to cycling on degenerate vertices.

use crate::error::{LpError, Result};
use crate::solution::{LpSolution, LpSolver, LpStatus, Tolerances};
use crate::standard::StandardFormLp;

#[derive(Debug, Clone)]
pub struct BlandSimplex {
    pub tol: Tolerances,
    pub max_iterations: usize,
    pub refactor_every: usize,
}

impl Default for BlandSimplex {
    fn default() -> Self {
        Self::new(Tolerances::default())
    }
}

impl BlandSimplex {
    pub fn new(tol: Tolerances) -> Self {
        Self {
            tol,
            max_iterations: 200_000,
            refactor_every: 64,
        }
    }
}

impl LpSolver for BlandSimplex {
    fn name(&self) -> &'static str {
        "bland-simplex"
    }

    fn solve(&self, lp: &StandardFormLp) -> Result<LpSolution> {
        Tableau::new(lp, self).run()
    }
}

/// Solves `lp` with the reference simplex.
pub fn solve(lp: &StandardFormLp, tol: Tolerances) -> Result<LpSolution> {
    BlandSimplex::new(tol).solve(lp)
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

struct Tableau<'a> {
    lp: &'a StandardFormLp,
    opts: &'a BlandSimplex,
    m: usize,
    n: usize,
    /// Row sign flips that make `b >= 0`.
    flip: Vec<f64>,
    rhs: Vec<f64>,
    /// Basic column per row; columns `n..n+m` are artificials.
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// Row-major `m x m` basis inverse.
    binv: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
}

impl<'a> Tableau<'a> {
    fn new(lp: &'a StandardFormLp, opts: &'a BlandSimplex) -> Self {
        let m = lp.num_rows;
        let n = lp.num_cols();
        let flip: Vec<f64> = lp.b.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
        let rhs: Vec<f64> = lp.b.iter().map(|b| b.abs()).collect();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        let mut is_basic = vec![false; n + m];
        for flag in is_basic.iter_mut().skip(n) {
            *flag = true;
        }
        Self {
            lp,
            opts,
            m,
            n,
            flip,
            xb: rhs.clone(),
            rhs,
            basis: (n..n + m).collect(),
            is_basic,
            binv,
            iterations: 0,
            since_refactor: 0,
        }
    }

    fn for_each_entry(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for &(i, a) in &self.lp.cols[j] {
                f(i, a * self.flip[i]);
            }
        } else {
            f(j - self.n, 1.0);
        }
    }

    /// `B^-1 A_j`
    fn column(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut u = vec![0.0; m];
        self.for_each_entry(j, |k, a| {
            for (i, ui) in u.iter_mut().enumerate() {
                *ui += a * self.binv[i * m + k];
            }
        });
        u
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &bj) in self.basis.iter().enumerate() {
            let cb = cost[bj];
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yk, &r) in y.iter_mut().zip(row) {
                    *yk += cb * r;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, cost: &[f64], y: &[f64]) -> f64 {
        let mut d = cost[j];
        self.for_each_entry(j, |i, a| d -= a * y[i]);
        d
    }

    fn pivot(&mut self, r: usize, q: usize, u: &[f64]) {
        let m = self.m;
        let piv = u[r];
        let theta = self.xb[r] / piv;
        for i in 0..m {
            if i != r && u[i] != 0.0 {
                self.xb[i] -= theta * u[i];
                if self.xb[i] < 0.0 && self.xb[i] > -self.opts.tol.feasibility {
                    self.xb[i] = 0.0;
                }
            }
        }
        self.xb[r] = theta;

        let (before, rest) = self.binv.split_at_mut(r * m);
        let (pivot_row, after) = rest.split_at_mut(m);
        for v in pivot_row.iter_mut() {
            *v /= piv;
        }
        for (i, row) in before.chunks_exact_mut(m).enumerate() {
            let f = u[i];
            if f != 0.0 {
                for (x, &p) in row.iter_mut().zip(pivot_row.iter()) {
                    *x -= f * p;
                }
            }
        }
        for (off, row) in after.chunks_exact_mut(m).enumerate() {
            let f = u[r + 1 + off];
            if f != 0.0 {
                for (x, &p) in row.iter_mut().zip(pivot_row.iter()) {
                    *x -= f * p;
                }
            }
        }

        self.is_basic[self.basis[r]] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
        self.iterations += 1;
        self.since_refactor += 1;
        if self.since_refactor >= self.opts.refactor_every {
            self.refactor();
        }
    }

    /// Rebuilds `B^-1` from the basic columns and recomputes `x_B`.
    fn refactor(&mut self) {
        let m = self.m;
        let mut bmat = vec![0.0; m * m];
        for (col_pos, &j) in self.basis.iter().enumerate() {
            self.for_each_entry(j, |i, a| bmat[i * m + col_pos] = a);
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for k in 0..m {
            let p = (k..m)
                .max_by(|&a, &b| bmat[a * m + k].abs().total_cmp(&bmat[b * m + k].abs()))
                .unwrap_or(k);
            if bmat[p * m + k].abs() < 1e-14 {
                // Singular basis; keep the product-form inverse.
                self.since_refactor = 0;
                return;
            }
            if p != k {
                for c in 0..m {
                    bmat.swap(p * m + c, k * m + c);
                    inv.swap(p * m + c, k * m + c);
                }
            }
            let d = bmat[k * m + k];
            for c in 0..m {
                bmat[k * m + c] /= d;
                inv[k * m + c] /= d;
            }
            for i in 0..m {
                if i != k {
                    let f = bmat[i * m + k];
                    if f != 0.0 {
                        for c in 0..m {
                            bmat[i * m + c] -= f * bmat[k * m + c];
                            inv[i * m + c] -= f * inv[k * m + c];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let v: f64 = row.iter().zip(&self.rhs).map(|(a, b)| a * b).sum();
            self.xb[i] = if v < 0.0 && v > -self.opts.tol.feasibility { 0.0 } else { v };
        }
        self.since_refactor = 0;
    }

    fn run_phase(&mut self, cost: &[f64], phase: u8) -> Result<PhaseOutcome> {
        let tol = self.opts.tol;
        loop {
            if self.iterations >= self.opts.max_iterations {
                let obj: f64 = self.basis.iter().zip(&self.xb).map(|(&j, x)| cost[j] * x).sum();
                return Err(LpError::IterationLimit {
                    limit: self.opts.max_iterations,
                    phase,
                    objective: obj,
                });
            }
            let y = self.duals(cost);
            // Artificial columns never re-enter once they leave.
            let entering = (0..self.n).find(|&j| {
                !self.is_basic[j] && self.reduced_cost(j, cost, &y) < -tol.optimality * (1.0 + cost[j].abs())
            });
            let Some(q) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };
            let u = self.column(q);

            let mut leave: Option<(usize, f64)> = None;
            for (i, &ui) in u.iter().enumerate() {
                if ui > tol.pivot {
                    let ratio = self.xb[i].max(0.0) / ui;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best)) => {
                            let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                            if ratio < best && !tie {
                                Some((i, ratio))
                            } else if tie && self.basis[i] < self.basis[r] {
                                Some((i, best.min(ratio)))
                            } else {
                                Some((r, best))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Ok(PhaseOutcome::Unbounded),
                Some((r, _)) => self.pivot(r, q, &u),
            }
        }
    }

    /// Pivots zero-level artificials out of the basis where a structural
    /// column can replace them. Rows where none can are redundant.
    fn expel_artificials(&mut self) {
        let m = self.m;
        for r in 0..m {
            if self.basis[r] < self.n {
                continue;
            }
            let candidate = (0..self.n).find(|&j| {
                if self.is_basic[j] {
                    return false;
                }
                let mut v = 0.0;
                self.for_each_entry(j, |k, a| v += a * self.binv[r * m + k]);
                v.abs() > 1e-9
            });
            if let Some(q) = candidate {
                let u = self.column(q);
                self.pivot(r, q, &u);
            }
        }
    }

    fn run(mut self) -> Result<LpSolution> {
        let name = self.opts.name();
        let scale = 1.0 + self.rhs.iter().fold(0.0_f64, |a, b| a.max(*b));

        if self.m > 0 {
            let mut phase1 = vec![0.0; self.n + self.m];
            for c in phase1.iter_mut().skip(self.n) {
                *c = 1.0;
            }
            self.run_phase(&phase1, 1)?;
            let infeas: f64 = self
                .basis
                .iter()
                .zip(&self.xb)
                .filter(|(&j, _)| j >= self.n)
                .map(|(_, x)| x.abs())
                .sum();
            if infeas > self.opts.tol.feasibility * scale {
                return Ok(LpSolution::non_optimal(LpStatus::Infeasible, self.iterations, name));
            }
            self.expel_artificials();
        }

        let mut cost = self.lp.c.clone();
        cost.resize(self.n + self.m, 0.0);
        match self.run_phase(&cost, 2)? {
            PhaseOutcome::Unbounded => {
                return Ok(LpSolution::non_optimal(LpStatus::Unbounded, self.iterations, name));
            }
            PhaseOutcome::Optimal => {}
        }
        if self.since_refactor > 0 && self.m > 0 {
            self.refactor();
        }

        let mut x = vec![0.0; self.n];
        for (&j, &v) in self.basis.iter().zip(&self.xb) {
            if j < self.n {
                x[j] = v.max(0.0);
            }
        }
        let y: Vec<f64> = self
            .duals(&cost)
            .into_iter()
            .zip(&self.flip)
            .map(|(y, f)| y * f)
            .collect();
        Ok(LpSolution::optimal(self.lp, x, y, self.iterations, name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LpModel, Sense};
    use crate::standard::compile_standard_form;

    fn run(m: &LpModel) -> LpSolution {
        solve(&compile_standard_form(m).unwrap(), Tolerances::default()).unwrap()
    }

    #[test]
    fn single_variable_upper_limit() {
        let mut m = LpModel::new();
        let x = m.add_var("x", 0.0, f64::INFINITY, -1.0);
        m.add_constraint("cap", [(x, 1.0)], Sense::Le, 5.0);
        let s = run(&m);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.primal[0] - 5.0).abs() < 1e-12);
        assert!((s.objective + 5.0).abs() < 1e-12);
        // one more unit of capacity lowers the objective by one
        assert!((s.duals[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut m = LpModel::new();
        let x = m.add_var("x", 0.0, f64::INFINITY, 1.0);
        m.add_constraint("lo", [(x, 1.0)], Sense::Ge, 3.0);
        m.add_constraint("hi", [(x, 1.0)], Sense::Le, 2.0);
        assert_eq!(run(&m).status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray_detected() {
        let mut m = LpModel::new();
        let x = m.add_var("x", 0.0, f64::INFINITY, -1.0);
        let y = m.add_var("y", 0.0, f64::INFINITY, 0.0);
        m.add_constraint("c", [(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
        assert_eq!(run(&m).status, LpStatus::Unbounded);
    }

    #[test]
    fn redundant_equalities_handled() {
        let mut m = LpModel::new();
        let x = m.add_var("x", 0.0, f64::INFINITY, 1.0);
        let y = m.add_var("y", 0.0, f64::INFINITY, 2.0);
        m.add_constraint("a", [(x, 1.0), (y, 1.0)], Sense::Eq, 4.0);
        m.add_constraint("b", [(x, 2.0), (y, 2.0)], Sense::Eq, 8.0);
        let s = run(&m);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 4.0).abs() < 1e-12);
    }

    #[test]
    fn free_and_negative_bounds() {
        // min x + y  s.t. x - y = -3, x in [-5, 5], y free, y <= 10
        let mut m = LpModel::new();
        let x = m.add_var("x", -5.0, 5.0, 1.0);
        let y = m.add_var("y", f64::NEG_INFINITY, 10.0, 1.0);
        m.add_constraint("d", [(x, 1.0), (y, -1.0)], Sense::Eq, -3.0);
        let s = run(&m);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.primal[0] + 5.0).abs() < 1e-12);
        assert!((s.primal[1] + 2.0).abs() < 1e-12);
        assert!((s.objective + 7.0).abs() < 1e-12);
    }

    #[test]
    fn classic_degenerate_instance_terminates() {
        // Beale's cycling example; Dantzig's rule cycles here, Bland's does not.
        let mut m = LpModel::new();
        let x1 = m.add_var("x1", 0.0, f64::INFINITY, -0.75);
        let x2 = m.add_var("x2", 0.0, f64::INFINITY, 20.0);
        let x3 = m.add_var("x3", 0.0, f64::INFINITY, -0.5);
        let x4 = m.add_var("x4", 0.0, f64::INFINITY, 6.0);
        m.add_constraint("r1", [(x1, 0.25), (x2, -8.0), (x3, -1.0), (x4, 9.0)], Sense::Le, 0.0);
        m.add_constraint("r2", [(x1, 0.5), (x2, -12.0), (x3, -0.5), (x4, 3.0)], Sense::Le, 0.0);
        m.add_constraint("r3", [(x3, 1.0)], Sense::Le, 1.0);
        let s = run(&m);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 1.25).abs() < 1e-12);
    }
}
