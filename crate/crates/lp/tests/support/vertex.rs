//! Brute-force oracle: enumerate every basis of an equality-form LP
//! `min c·x, A x = b, x >= 0` and keep the best basic feasible solution.

use gridnwa_lp::{LpModel, Sense};
use rand::Rng;

pub struct EqualityLp {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

fn solve_square(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))?;
        if m[p][k].abs() < 1e-10 {
            return None;
        }
        m.swap(k, p);
        rhs.swap(k, p);
        for i in 0..n {
            if i != k {
                let f = m[i][k] / m[k][k];
                if f != 0.0 {
                    for j in k..n {
                        m[i][j] -= f * m[k][j];
                    }
                    rhs[i] -= f * rhs[k];
                }
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] != i + n - k {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Minimum objective over all basic feasible solutions, `None` if there are none.
pub fn enumerate_vertices(lp: &EqualityLp) -> Option<f64> {
    let m = lp.b.len();
    let n = lp.c.len();
    let mut idx: Vec<usize> = (0..m).collect();
    let mut best: Option<f64> = None;
    loop {
        let basis: Vec<Vec<f64>> = (0..m).map(|i| idx.iter().map(|&j| lp.a[i][j]).collect()).collect();
        if let Some(xb) = solve_square(basis, lp.b.clone()) {
            if xb.iter().all(|&v| v >= -1e-9) {
                let obj: f64 = idx.iter().zip(&xb).map(|(&j, &v)| lp.c[j] * v).sum();
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
        if !next_combination(&mut idx, n) {
            return best;
        }
    }
}

/// Random feasible, bounded LP with `n` structural variables and `m_eq`
/// equality rows, plus one positive `<=` row that bounds the polytope and up
/// to two finite upper bounds. Returns the model and its equality form.
pub fn random_bounded(rng: &mut impl Rng, n: usize, m_eq: usize) -> (LpModel, EqualityLp) {
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let n_ub = rng.gen_range(0..=2usize.min(n));
    let ub: Vec<(usize, f64)> = (0..n_ub).map(|k| (k, x0[k] + rng.gen_range(0.1..1.0))).collect();

    let mut model = LpModel::new();
    let vars: Vec<_> = (0..n)
        .map(|j| {
            let upper = ub.iter().find(|(k, _)| *k == j).map_or(f64::INFINITY, |u| u.1);
            model.add_var(format!("x{j}"), 0.0, upper, c[j])
        })
        .collect();

    let total_rows = m_eq + 1 + ub.len();
    let total_cols = n + 1 + ub.len();
    let mut a = vec![vec![0.0; total_cols]; total_rows];
    let mut b = vec![0.0; total_rows];
    for i in 0..m_eq {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let rhs: f64 = row.iter().zip(&x0).map(|(r, x)| r * x).sum();
        model.add_constraint(format!("e{i}"), vars.iter().copied().zip(row.iter().copied()), Sense::Eq, rhs);
        a[i][..n].copy_from_slice(&row);
        b[i] = rhs;
    }
    let cap_row: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let cap_rhs = cap_row.iter().zip(&x0).map(|(r, x)| r * x).sum::<f64>() + rng.gen_range(0.5..3.0);
    model.add_constraint("cap", vars.iter().copied().zip(cap_row.iter().copied()), Sense::Le, cap_rhs);
    a[m_eq][..n].copy_from_slice(&cap_row);
    a[m_eq][n] = 1.0;
    b[m_eq] = cap_rhs;
    for (k, &(j, u)) in ub.iter().enumerate() {
        a[m_eq + 1 + k][j] = 1.0;
        a[m_eq + 1 + k][n + 1 + k] = 1.0;
        b[m_eq + 1 + k] = u;
    }
    let mut c_eq = c;
    c_eq.resize(total_cols, 0.0);
    (model, EqualityLp { a, b, c: c_eq })
}
