//! Metropolis random walk over Gompertz `(shape, scale)` in log space.
//!
//! The chain targets `exp(score / temperature)` where `score` is the negated
//! mean squared log error between the candidate density and a reflected
//! Gaussian KDE of the data, both evaluated at the sample quantiles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distribution::{Gompertz, GrowthDistribution};
use crate::error::{CoreError, Result};
use crate::numeric::{quantile_sorted, std_dev};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    pub chain_length: usize,
    /// Random-walk standard deviation in log-parameter space.
    pub step_size: f64,
    pub temperature: f64,
    pub burn_in_fraction: f64,
    /// Running-mean relative change over the last 10% of the chain.
    pub convergence_tol: f64,
    /// Chain length is doubled until this cap while the diagnostic fails.
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            chain_length: 50_000,
            step_size: 0.02,
            temperature: 5e-5,
            burn_in_fraction: 0.2,
            convergence_tol: 1e-3,
            max_iterations: 400_000,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcFit {
    pub distribution: Gompertz,
    pub iterations: usize,
    pub acceptance_rate: f64,
    pub diagnostic: f64,
    /// Best score seen on the chain.
    pub best_score: f64,
}

impl McmcFit {
    pub fn growth_distribution(&self) -> GrowthDistribution {
        GrowthDistribution::Gompertz(self.distribution)
    }
}

/// Cap on quantile evaluation points; the KDE still uses every sample.
const MAX_POINTS: usize = 512;

struct Target {
    points: Vec<f64>,
    ln_kde: Vec<f64>,
}

impl Target {
    fn new(samples: &[f64]) -> Result<Self> {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let sd = std_dev(&sorted);
        let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
        let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
        if !(spread > 1e-12) {
            return Err(CoreError::validation("growth samples have zero variance; Gompertz fit is degenerate"));
        }
        let h = 0.9 * spread * (n as f64).powf(-0.2);
        let reflect = sorted[0] >= 0.0;
        let norm = 1.0 / ((n as f64) * h * (2.0 * std::f64::consts::PI).sqrt());
        let kde = |x: f64| {
            let mut s = 0.0;
            for &xi in &sorted {
                s += (-0.5 * ((x - xi) / h).powi(2)).exp();
                if reflect {
                    s += (-0.5 * ((x + xi) / h).powi(2)).exp();
                }
            }
            s * norm
        };
        // Gompertz support starts at zero.
        let m = n.min(MAX_POINTS);
        let points: Vec<f64> = (0..m)
            .map(|i| quantile_sorted(&sorted, (i as f64 + 0.5) / m as f64))
            .filter(|&q| q > 0.0)
            .collect();
        if points.is_empty() {
            return Err(CoreError::validation("no positive growth samples to fit"));
        }
        let ln_kde = points.iter().map(|&q| kde(q).ln()).collect();
        Ok(Self { points, ln_kde })
    }

    fn score(&self, ln_shape: f64, ln_scale: f64) -> f64 {
        let g = Gompertz {
            shape: ln_shape.exp(),
            scale: ln_scale.exp(),
        };
        let mut sse = 0.0;
        for (&q, &lk) in self.points.iter().zip(&self.ln_kde) {
            let d = g.ln_pdf(q) - lk;
            sse += d * d;
        }
        let s = -sse / self.points.len() as f64;
        if s.is_finite() {
            s
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Moment-style starting point: scale from the spread, shape from the median.
fn initial_guess(samples: &[f64]) -> (f64, f64) {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let scale = std_dev(&sorted).max(1e-4);
    let median = quantile_sorted(&sorted, 0.5).max(1e-6);
    let shape = (std::f64::consts::LN_2 / (median / scale).exp_m1()).clamp(1e-4, 1e4);
    (shape.ln(), scale.ln())
}

fn relative_change(a: [f64; 2], b: [f64; 2]) -> f64 {
    (0..2).map(|i| ((a[i] - b[i]) / b[i]).abs()).fold(0.0, f64::max)
}

pub fn mcmc_fit(samples: &[f64], config: &McmcConfig) -> Result<McmcFit> {
    if samples.is_empty() {
        return Err(CoreError::validation("no growth samples"));
    }
    if config.chain_length < 1000 {
        return Err(CoreError::validation("chain length must be at least 1000"));
    }
    if !(config.temperature > 0.0 && config.step_size > 0.0) {
        return Err(CoreError::validation("temperature and step size must be positive"));
    }
    let target = Target::new(samples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let (mut a, mut b) = initial_guess(samples);
    let mut cur = target.score(a, b);
    let mut best = cur;
    let mut accepted = 0usize;
    let mut trace: Vec<[f64; 2]> = Vec::with_capacity(config.chain_length);
    let mut length = config.chain_length;
    let mut it = 0usize;

    loop {
        while it < length {
            // Box-Muller pair from two uniforms keeps the draw count fixed per step.
            let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
            let u2: f64 = rng.gen();
            let r = (-2.0 * u1.ln()).sqrt();
            let th = 2.0 * std::f64::consts::PI * u2;
            let na = a + config.step_size * r * th.cos();
            let nb = b + config.step_size * r * th.sin();
            let cand = target.score(na, nb);
            let u: f64 = rng.gen();
            if cand.is_finite() && u.ln() < (cand - cur) / config.temperature {
                a = na;
                b = nb;
                cur = cand;
                accepted += 1;
                best = best.max(cur);
            }
            trace.push([a.exp(), b.exp()]);
            it += 1;
        }

        let burn = ((length as f64) * config.burn_in_fraction) as usize;
        let tail_start = length - length / 10;
        let mean_over = |end: usize| {
            let slice = &trace[burn..end];
            let mut m = [0.0; 2];
            for p in slice {
                m[0] += p[0];
                m[1] += p[1];
            }
            [m[0] / slice.len() as f64, m[1] / slice.len() as f64]
        };
        let full = mean_over(length);
        let diagnostic = relative_change(mean_over(tail_start), full);
        if diagnostic < config.convergence_tol {
            return Ok(McmcFit {
                distribution: Gompertz::new(full[0], full[1])?,
                iterations: length,
                acceptance_rate: accepted as f64 / length as f64,
                diagnostic,
                best_score: best,
            });
        }
        if length * 2 > config.max_iterations {
            return Err(CoreError::NonConvergence {
                iterations: length,
                diagnostic,
            });
        }
        length *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_samples_rejected() {
        let err = mcmc_fit(&[0.06; 30], &McmcConfig::default()).unwrap_err();
        assert!(err.to_string().contains("zero variance"));
    }

    #[test]
    fn short_chain_rejected() {
        let cfg = McmcConfig { chain_length: 10, ..McmcConfig::default() };
        assert!(mcmc_fit(&[0.01, 0.02, 0.03], &cfg).is_err());
    }

    #[test]
    fn seed_determinism() {
        let s: Vec<f64> = (0..40).map(|i| 0.02 + 0.002 * i as f64).collect();
        let cfg = McmcConfig { chain_length: 5000, ..McmcConfig::default() };
        let a = mcmc_fit(&s, &cfg);
        let b = mcmc_fit(&s, &cfg);
        match (a, b) {
            (Ok(a), Ok(b)) => assert_eq!(a, b),
            (Err(a), Err(b)) => assert_eq!(a.to_string(), b.to_string()),
            _ => panic!("runs diverged"),
        }
    }
}
