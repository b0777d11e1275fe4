//! Compilation of an [`LpModel`] into standard form
//! `min c·x  s.t.  A x = b, x >= 0`, with the substitutions recorded so
//! that a standard-form point maps back onto the model variables.

use crate::error::Result;
use crate::model::{LpModel, Sense};

/// How one model variable is expressed through standard-form columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarMap {
    /// `x = lower + col`
    Shifted { col: usize, lower: f64 },
    /// `x = upper - col`
    Reflected { col: usize, upper: f64 },
    /// `x = pos - neg`
    Split { pos: usize, neg: usize },
    /// `lower == upper`; no column is emitted.
    Fixed { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowOrigin {
    Constraint(usize),
    /// `x' + s = upper - lower` for a doubly bounded variable.
    UpperBound(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColOrigin {
    Structural { var: usize },
    Slack { row: usize },
}

/// Sparse column-major standard-form LP.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardFormLp {
    pub num_rows: usize,
    /// `cols[j]` holds `(row, value)` pairs sorted by row.
    pub cols: Vec<Vec<(usize, f64)>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub objective_offset: f64,
    pub var_map: Vec<VarMap>,
    pub row_origin: Vec<RowOrigin>,
    pub col_origin: Vec<ColOrigin>,
    /// Standard-form row of each model constraint.
    pub constraint_row: Vec<usize>,
}

impl StandardFormLp {
    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.c.iter().zip(x).map(|(c, x)| c * x).sum::<f64>()
    }

    /// `A x - b`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = self.b.iter().map(|b| -b).collect();
        for (col, &xj) in self.cols.iter().zip(x) {
            if xj != 0.0 {
                for &(i, a) in col {
                    r[i] += a * xj;
                }
            }
        }
        r
    }

    /// Reduced costs `c - A^T y`.
    pub fn reduced_costs(&self, y: &[f64]) -> Vec<f64> {
        self.cols
            .iter()
            .zip(&self.c)
            .map(|(col, &cj)| cj - col.iter().map(|&(i, a)| a * y[i]).sum::<f64>())
            .collect()
    }

    /// Maps a standard-form point onto the model variables.
    pub fn recover_primal(&self, x: &[f64]) -> Vec<f64> {
        self.var_map
            .iter()
            .map(|m| match *m {
                VarMap::Shifted { col, lower } => lower + x[col],
                VarMap::Reflected { col, upper } => upper - x[col],
                VarMap::Split { pos, neg } => x[pos] - x[neg],
                VarMap::Fixed { value } => value,
            })
            .collect()
    }

    /// Row duals of the model constraints, i.e. the sensitivity of the
    /// optimal objective to each constraint right-hand side.
    pub fn recover_duals(&self, y: &[f64]) -> Vec<f64> {
        self.constraint_row.iter().map(|&r| y[r]).collect()
    }

    /// Maps a model point into standard form, filling slacks from the row
    /// activities. Used to check the recovery map and to certify points
    /// produced elsewhere.
    pub fn lift_primal(&self, model_x: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.num_cols()];
        for (j, m) in self.var_map.iter().enumerate() {
            let v = model_x[j];
            match *m {
                VarMap::Shifted { col, lower } => x[col] = v - lower,
                VarMap::Reflected { col, upper } => x[col] = upper - v,
                VarMap::Split { pos, neg } => {
                    x[pos] = v.max(0.0);
                    x[neg] = (-v).max(0.0);
                }
                VarMap::Fixed { .. } => {}
            }
        }
        let mut activity: Vec<f64> = self.b.iter().map(|b| -b).collect();
        let mut slack_of_row = vec![None; self.num_rows];
        for (j, col) in self.cols.iter().enumerate() {
            match self.col_origin[j] {
                ColOrigin::Slack { row } => slack_of_row[row] = Some((j, col[0].1)),
                ColOrigin::Structural { .. } => {
                    for &(i, a) in col {
                        activity[i] += a * x[j];
                    }
                }
            }
        }
        for (row, slot) in slack_of_row.into_iter().enumerate() {
            if let Some((j, sign)) = slot {
                x[j] = -activity[row] / sign;
            }
        }
        x
    }
}

/// Compiles `model` into standard form.
///
/// Each ≤ or ≥ row receives one slack column, each free variable is split
/// into a difference of nonnegatives, and each doubly bounded variable
/// receives an explicit upper-bound row.
pub fn compile_standard_form(model: &LpModel) -> Result<StandardFormLp> {
    model.validate()?;

    let mut cols: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut c: Vec<f64> = Vec::new();
    let mut col_origin = Vec::new();
    let mut var_map = Vec::with_capacity(model.num_vars());
    let mut offset = model.objective_offset;

    // (column, coefficient) pairs substituting each model variable, plus
    // the constant part of the substitution.
    let mut subst: Vec<(Vec<(usize, f64)>, f64)> = Vec::with_capacity(model.num_vars());

    for (j, v) in model.variables.iter().enumerate() {
        let lo_finite = v.lower.is_finite();
        let up_finite = v.upper.is_finite();
        let mut push_col = |cost: f64| {
            cols.push(Vec::new());
            c.push(cost);
            col_origin.push(ColOrigin::Structural { var: j });
            cols.len() - 1
        };
        let (map, terms, constant) = if lo_finite && up_finite && v.lower == v.upper {
            (VarMap::Fixed { value: v.lower }, vec![], v.lower)
        } else if lo_finite {
            let col = push_col(v.cost);
            (VarMap::Shifted { col, lower: v.lower }, vec![(col, 1.0)], v.lower)
        } else if up_finite {
            let col = push_col(-v.cost);
            (VarMap::Reflected { col, upper: v.upper }, vec![(col, -1.0)], v.upper)
        } else {
            let pos = push_col(v.cost);
            let neg = push_col(-v.cost);
            (VarMap::Split { pos, neg }, vec![(pos, 1.0), (neg, -1.0)], 0.0)
        };
        offset += v.cost * constant;
        var_map.push(map);
        subst.push((terms, constant));
    }

    let mut b = Vec::new();
    let mut row_origin = Vec::new();
    let mut constraint_row = Vec::with_capacity(model.num_constraints());

    for (i, con) in model.constraints.iter().enumerate() {
        let row = b.len();
        let mut rhs = con.rhs;
        for &(v, a) in &con.terms {
            let (terms, constant) = &subst[v.0];
            rhs -= a * constant;
            for &(col, coef) in terms {
                cols[col].push((row, a * coef));
            }
        }
        let slack_sign = match con.sense {
            Sense::Le => Some(1.0),
            Sense::Ge => Some(-1.0),
            Sense::Eq => None,
        };
        if let Some(sign) = slack_sign {
            cols.push(vec![(row, sign)]);
            c.push(0.0);
            col_origin.push(ColOrigin::Slack { row });
        }
        b.push(rhs);
        row_origin.push(RowOrigin::Constraint(i));
        constraint_row.push(row);
    }

    for (j, v) in model.variables.iter().enumerate() {
        if let VarMap::Shifted { col, lower } = var_map[j] {
            if v.upper.is_finite() {
                let row = b.len();
                cols[col].push((row, 1.0));
                cols.push(vec![(row, 1.0)]);
                c.push(0.0);
                col_origin.push(ColOrigin::Slack { row });
                b.push(v.upper - lower);
                row_origin.push(RowOrigin::UpperBound(j));
            }
        }
    }

    for col in &mut cols {
        col.sort_by_key(|&(r, _)| r);
        col.retain(|&(_, a)| a != 0.0);
    }

    Ok(StandardFormLp {
        num_rows: b.len(),
        cols,
        b,
        c,
        objective_offset: offset,
        var_map,
        row_origin,
        col_origin,
        constraint_row,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::LpError;

    #[test]
    fn le_row_gets_one_slack() {
        let mut m = LpModel::new();
        let x = m.add_var("x", 0.0, f64::INFINITY, -1.0);
        m.add_constraint("cap", [(x, 1.0)], Sense::Le, 5.0);
        let sf = compile_standard_form(&m).unwrap();
        assert_eq!(sf.num_rows, 1);
        assert_eq!(sf.num_cols(), 2);
        assert_eq!(sf.col_origin[1], ColOrigin::Slack { row: 0 });
        assert_eq!(sf.cols[1], vec![(0, 1.0)]);
    }

    #[test]
    fn free_variable_is_split() {
        let mut m = LpModel::new();
        let x = m.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 2.0);
        m.add_constraint("fix", [(x, 1.0)], Sense::Eq, -3.0);
        let sf = compile_standard_form(&m).unwrap();
        assert_eq!(sf.var_map[0], VarMap::Split { pos: 0, neg: 1 });
        assert_eq!(sf.c, vec![2.0, -2.0]);
        assert_eq!(sf.recover_primal(&[0.0, 3.0]), vec![-3.0]);
    }

    #[test]
    fn bounded_variable_gets_upper_row() {
        let mut m = LpModel::new();
        m.add_var("x", 1.0, 4.0, 1.0);
        let sf = compile_standard_form(&m).unwrap();
        assert_eq!(sf.row_origin, vec![RowOrigin::UpperBound(0)]);
        assert_eq!(sf.b, vec![3.0]);
        assert_eq!(sf.objective_offset, 1.0);
    }

    #[test]
    fn upper_only_variable_is_reflected() {
        let mut m = LpModel::new();
        let x = m.add_var("x", f64::NEG_INFINITY, 2.0, 1.0);
        m.add_constraint("ge", [(x, 1.0)], Sense::Ge, -1.0);
        let sf = compile_standard_form(&m).unwrap();
        assert_eq!(sf.var_map[0], VarMap::Reflected { col: 0, upper: 2.0 });
        // x = 2 - x', so the row reads -x' - s = -3
        assert_eq!(sf.b, vec![-3.0]);
        assert_eq!(sf.recover_primal(&[2.5, 0.0]), vec![-0.5]);
    }

    #[test]
    fn inconsistent_bounds_error() {
        let mut m = LpModel::new();
        m.add_var("x", 1.0, 0.0, 0.0);
        assert!(matches!(
            compile_standard_form(&m),
            Err(LpError::InconsistentBounds { .. })
        ));
    }

    #[test]
    fn lift_then_recover_is_identity() {
        let mut m = LpModel::new();
        let x = m.add_var("x", -1.0, 3.0, 1.0);
        let y = m.add_var("y", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        let z = m.add_var("z", f64::NEG_INFINITY, 0.5, 1.0);
        m.add_constraint("a", [(x, 1.0), (y, 2.0)], Sense::Le, 10.0);
        m.add_constraint("b", [(y, 1.0), (z, -1.0)], Sense::Ge, -7.0);
        let sf = compile_standard_form(&m).unwrap();
        let pt = [0.25, -1.5, 0.125];
        let lifted = sf.lift_primal(&pt);
        assert_eq!(sf.recover_primal(&lifted), pt.to_vec());
        assert!(sf.residual(&lifted).iter().all(|r| r.abs() < 1e-12));
        assert!((sf.objective(&lifted) - m.objective_value(&pt)).abs() < 1e-12);
    }
}
