use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distribution::{bucket_masses, BucketSpec, GrowthDistribution};
use super::GrowthState;
use crate::error::{CoreError, Result};

/// Row-stochastic 3x3 matrix over `[Low, Mid, High]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub p: [[f64; 3]; 3],
}

impl TransitionMatrix {
    /// Delhi study matrix; shipped as data, not derived.
    pub fn delhi_default() -> Self {
        Self {
            p: [[0.34, 0.33, 0.33], [0.38, 0.32, 0.30], [0.20, 0.80, 0.00]],
        }
    }

    pub fn identity() -> Self {
        Self {
            p: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Every state moves to `s` with certainty.
    pub fn constant(s: GrowthState) -> Self {
        let mut p = [[0.0; 3]; 3];
        for row in &mut p {
            row[s.index()] = 1.0;
        }
        Self { p }
    }

    pub fn new(p: [[f64; 3]; 3]) -> Result<Self> {
        let m = Self { p };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.p.iter().enumerate() {
            if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(CoreError::validation(format!("transition row {i} has an entry outside [0, 1]")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(CoreError::validation(format!("transition row {i} sums to {s}")));
            }
        }
        Ok(())
    }

    pub fn row(&self, s: GrowthState) -> [f64; 3] {
        self.p[s.index()]
    }

    /// Inverse-CDF step for a uniform draw `u` in `[0, 1)`. Zero-probability
    /// successors are never returned.
    pub fn step(&self, s: GrowthState, u: f64) -> GrowthState {
        let row = self.row(s);
        let mut cum = 0.0;
        for (j, &pj) in row.iter().enumerate() {
            cum += pj;
            if pj > 0.0 && u < cum {
                return GrowthState::ALL[j];
            }
        }
        let last = row.iter().rposition(|&pj| pj > 0.0).expect("row sums to 1");
        GrowthState::ALL[last]
    }
}

/// Transition matrix under independent period draws: `P(s, s') = P(g' in s')`
/// for every source bucket with positive mass; empty source buckets keep
/// their state.
pub fn build_transition_matrix(dist: &GrowthDistribution, spec: &BucketSpec) -> Result<TransitionMatrix> {
    let masses = bucket_masses(dist, spec)?;
    let total: f64 = masses.iter().sum();
    let normalized = masses.map(|m| m / total);
    let mut p = [[0.0; 3]; 3];
    for (i, row) in p.iter_mut().enumerate() {
        if masses[i] > 0.0 {
            *row = normalized;
        } else {
            row[i] = 1.0;
        }
    }
    Ok(TransitionMatrix { p })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthPeriod {
    pub period: usize,
    pub state: GrowthState,
    pub growth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthTrajectory {
    pub periods: Vec<GrowthPeriod>,
}

impl GrowthTrajectory {
    pub fn states(&self) -> Vec<GrowthState> {
        self.periods.iter().map(|p| p.state).collect()
    }
}

/// Markov chain of `horizon` periods whose first period is `start`.
pub fn sample_trajectory(
    matrix: &TransitionMatrix,
    start: GrowthState,
    horizon: usize,
    representative: &[f64; 3],
    seed: u64,
) -> Result<GrowthTrajectory> {
    if horizon == 0 {
        return Err(CoreError::validation("horizon must be at least one period"));
    }
    matrix.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = start;
    let mut periods = Vec::with_capacity(horizon);
    for period in 0..horizon {
        if period > 0 {
            state = matrix.step(state, rng.gen::<f64>());
        }
        periods.push(GrowthPeriod {
            period,
            state,
            growth: representative[state.index()],
        });
    }
    Ok(GrowthTrajectory { periods })
}
