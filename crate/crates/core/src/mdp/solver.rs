//! Finite discounted cost-minimizing MDPs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpAction {
    pub cost: f64,
    /// `(successor, probability)`; probabilities sum to 1.
    pub transitions: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMdp {
    /// `actions[s]` lists the actions available in state `s`.
    pub actions: Vec<Vec<MdpAction>>,
}

impl FiniteMdp {
    pub fn n_states(&self) -> usize {
        self.actions.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_states();
        if n == 0 {
            return Err(CoreError::validation("MDP has no states"));
        }
        for (s, acts) in self.actions.iter().enumerate() {
            if acts.is_empty() {
                return Err(CoreError::validation(format!("state {s} has no actions")));
            }
            for a in acts {
                if !a.cost.is_finite() {
                    return Err(CoreError::validation(format!("state {s} has a non-finite cost")));
                }
                let mut total = 0.0;
                for &(j, p) in &a.transitions {
                    if j >= n || !(0.0..=1.0).contains(&p) {
                        return Err(CoreError::validation(format!("state {s} has an invalid transition")));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(CoreError::validation(format!("state {s} transitions sum to {total}")));
                }
            }
        }
        Ok(())
    }

    fn q(&self, s: usize, a: usize, gamma: f64, v: &[f64]) -> f64 {
        let act = &self.actions[s][a];
        act.cost + gamma * act.transitions.iter().map(|&(j, p)| p * v[j]).sum::<f64>()
    }

    /// `max_s |V(s) - min_a Q(s, a)|`.
    pub fn bellman_residual(&self, gamma: f64, v: &[f64]) -> f64 {
        (0..self.n_states())
            .map(|s| {
                let best = (0..self.actions[s].len()).map(|a| self.q(s, a, gamma, v)).fold(f64::INFINITY, f64::min);
                (v[s] - best).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Values of a fixed policy from `(I - gamma P) V = c`.
    pub fn evaluate_policy(&self, policy: &[usize], gamma: f64) -> Result<Vec<f64>> {
        let n = self.n_states();
        let mut m = DMatrix::<f64>::identity(n, n);
        let mut c = DVector::<f64>::zeros(n);
        for s in 0..n {
            let act = &self.actions[s][policy[s]];
            c[s] = act.cost;
            for &(j, p) in &act.transitions {
                m[(s, j)] -= gamma * p;
            }
        }
        m.lu()
            .solve(&c)
            .map(|v| v.iter().copied().collect())
            .ok_or_else(|| CoreError::validation("policy evaluation system is singular"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySolution {
    pub policy: Vec<usize>,
    pub values: Vec<f64>,
    pub iterations: usize,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(CoreError::validation("discount factor must lie in [0, 1)"));
    }
    Ok(())
}

/// Howard policy iteration. Improvement keeps the incumbent action unless
/// another is better by more than `tol`, so the loop terminates.
pub fn policy_iteration(mdp: &FiniteMdp, gamma: f64, tol: f64, max_iter: usize) -> Result<PolicySolution> {
    mdp.validate()?;
    check_gamma(gamma)?;
    let mut policy = vec![0usize; mdp.n_states()];
    for it in 1..=max_iter {
        let values = mdp.evaluate_policy(&policy, gamma)?;
        let mut stable = true;
        for s in 0..mdp.n_states() {
            let mut best = policy[s];
            let mut best_q = mdp.q(s, best, gamma, &values);
            for a in 0..mdp.actions[s].len() {
                let q = mdp.q(s, a, gamma, &values);
                if q < best_q - tol * (1.0 + best_q.abs()) {
                    best = a;
                    best_q = q;
                }
            }
            if best != policy[s] {
                policy[s] = best;
                stable = false;
            }
        }
        if stable {
            return Ok(PolicySolution {
                policy,
                values,
                iterations: it,
            });
        }
    }
    Err(CoreError::NonConvergence {
        iterations: max_iter,
        diagnostic: f64::NAN,
    })
}

/// Gauss-Jacobi value iteration until successive iterates differ by `tol`.
pub fn value_iteration(mdp: &FiniteMdp, gamma: f64, tol: f64, max_iter: usize) -> Result<PolicySolution> {
    mdp.validate()?;
    check_gamma(gamma)?;
    let n = mdp.n_states();
    let mut v = vec![0.0; n];
    let mut diff = f64::INFINITY;
    for it in 1..=max_iter {
        let next: Vec<f64> = (0..n)
            .map(|s| (0..mdp.actions[s].len()).map(|a| mdp.q(s, a, gamma, &v)).fold(f64::INFINITY, f64::min))
            .collect();
        diff = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if diff <= tol {
            let policy = (0..n)
                .map(|s| {
                    (0..mdp.actions[s].len())
                        .min_by(|&a, &b| mdp.q(s, a, gamma, &v).total_cmp(&mdp.q(s, b, gamma, &v)))
                        .expect("validated state has actions")
                })
                .collect();
            return Ok(PolicySolution {
                policy,
                values: v,
                iterations: it,
            });
        }
    }
    Err(CoreError::NonConvergence {
        iterations: max_iter,
        diagnostic: diff,
    })
}

/// Finite-horizon optimum with zero terminal value: `policy[k][s]` and
/// `values[k][s]` for stages `k = 0..stages`.
pub fn backward_induction(mdp: &FiniteMdp, gamma: f64, stages: usize) -> Result<(Vec<Vec<usize>>, Vec<Vec<f64>>)> {
    mdp.validate()?;
    let n = mdp.n_states();
    let mut next = vec![0.0; n];
    let mut policies = vec![Vec::new(); stages];
    let mut values = vec![Vec::new(); stages];
    for k in (0..stages).rev() {
        let mut pol = vec![0; n];
        let mut val = vec![0.0; n];
        for s in 0..n {
            let (a, q) = (0..mdp.actions[s].len())
                .map(|a| (a, mdp.q(s, a, gamma, &next)))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
            pol[s] = a;
            val[s] = q;
        }
        next = val.clone();
        policies[k] = pol;
        values[k] = val;
    }
    Ok((policies, values))
}

/// `F + gamma * sum_s' P(s, s') Q(s')`.
pub fn stage_value(stage_cost: f64, gamma: f64, row: &[f64], successor_values: &[f64]) -> Result<f64> {
    if row.len() != successor_values.len() {
        return Err(CoreError::Dimension("transition row and successor values differ in length".into()));
    }
    Ok(stage_cost + gamma * row.iter().zip(successor_values).map(|(p, q)| p * q).sum::<f64>())
}

/// Per-period discount factor `(1 + annual_rate)^-years`.
pub fn period_discount(annual_rate: f64, years: u32) -> f64 {
    (1.0 + annual_rate).powi(-(years as i32))
}
