use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::numeric::integrate;

/// Gompertz law on `x >= 0`: `F(x) = 1 - exp(-shape * (exp(x / scale) - 1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gompertz {
    pub shape: f64,
    pub scale: f64,
}

impl Gompertz {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
            return Err(CoreError::validation("Gompertz parameters must be positive and finite"));
        }
        Ok(Self { shape, scale })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let e = (x / self.scale).exp();
        self.shape / self.scale * e * (-self.shape * (e - 1.0)).exp()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return f64::NEG_INFINITY;
        }
        let z = x / self.scale;
        (self.shape / self.scale).ln() + z - self.shape * z.exp_m1()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        -(-self.shape * (x / self.scale).exp_m1()).exp_m1()
    }

    pub fn quantile(&self, u: f64) -> f64 {
        self.scale * (-(-u).ln_1p() / self.shape).ln_1p()
    }

    /// Upper end of the numerically relevant support.
    pub fn upper_support(&self) -> f64 {
        self.quantile(1.0 - 1e-14)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GrowthDistribution {
    Gompertz(Gompertz),
    /// Sorted samples; all probabilities are counting measures.
    Empirical { samples: Vec<f64> },
    Uniform { lo: f64, hi: f64 },
}

impl GrowthDistribution {
    pub fn empirical(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() || samples.iter().any(|x| !x.is_finite()) {
            return Err(CoreError::validation("empirical distribution needs finite samples"));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self::Empirical { samples })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gompertz(g) => Gompertz::new(g.shape, g.scale).map(|_| ()),
            Self::Empirical { samples } => {
                if samples.is_empty() {
                    Err(CoreError::validation("empirical distribution has no samples"))
                } else {
                    Ok(())
                }
            }
            Self::Uniform { lo, hi } => {
                if lo < hi {
                    Ok(())
                } else {
                    Err(CoreError::validation("uniform distribution needs lo < hi"))
                }
            }
        }
    }

    /// `P(g < x)`.
    pub fn prob_below(&self, x: f64) -> f64 {
        match self {
            Self::Gompertz(g) => g.cdf(x),
            Self::Empirical { samples } => samples.partition_point(|&s| s < x) as f64 / samples.len() as f64,
            Self::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    /// `P(g > x)`.
    pub fn prob_above(&self, x: f64) -> f64 {
        match self {
            Self::Gompertz(g) => 1.0 - g.cdf(x),
            Self::Empirical { samples } => {
                (samples.len() - samples.partition_point(|&s| s <= x)) as f64 / samples.len() as f64
            }
            Self::Uniform { lo, hi } => ((hi - x) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    /// Mean of `g` restricted to `(a, b)`, or `None` when that interval has no mass.
    pub fn conditional_mean(&self, a: f64, b: f64) -> Option<f64> {
        match self {
            Self::Gompertz(g) => {
                let lo = a.max(0.0);
                let hi = b.min(g.upper_support());
                if hi <= lo {
                    return None;
                }
                let mass = g.cdf(hi) - g.cdf(lo);
                if mass <= 1e-15 {
                    return None;
                }
                Some(integrate(&|x| x * g.pdf(x), lo, hi, 1e-13) / mass)
            }
            Self::Empirical { samples } => {
                let inside: Vec<f64> = samples.iter().copied().filter(|&s| s >= a && s <= b).collect();
                (!inside.is_empty()).then(|| inside.iter().sum::<f64>() / inside.len() as f64)
            }
            Self::Uniform { lo, hi } => {
                let l = a.max(*lo);
                let h = b.min(*hi);
                (h > l).then(|| 0.5 * (l + h))
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.conditional_mean(f64::NEG_INFINITY, f64::INFINITY).unwrap_or(0.0)
    }
}

/// Growth-bucket thresholds: Low is `g < low`, High is `g > high`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketSpec {
    pub low: f64,
    pub high: f64,
}

impl Default for BucketSpec {
    fn default() -> Self {
        Self { low: 0.05, high: 0.08 }
    }
}

impl BucketSpec {
    pub fn validate(&self) -> Result<()> {
        if self.low < self.high {
            Ok(())
        } else {
            Err(CoreError::validation("bucket thresholds need low < high"))
        }
    }

    pub fn classify(&self, g: f64) -> super::GrowthState {
        use super::GrowthState::*;
        if g < self.low {
            Low
        } else if g > self.high {
            High
        } else {
            Mid
        }
    }
}

/// `(pLow, pMid, pHigh)`, with Mid taken as the remainder.
pub fn bucket_masses(dist: &GrowthDistribution, spec: &BucketSpec) -> Result<[f64; 3]> {
    dist.validate()?;
    spec.validate()?;
    let low = dist.prob_below(spec.low);
    let high = dist.prob_above(spec.high);
    Ok([low, (1.0 - low - high).max(0.0), high])
}

/// Realized growth per bucket: the conditional mean over the bucket, falling
/// back to the nearest threshold (or the Mid midpoint) for empty buckets.
pub fn representative_growth(dist: &GrowthDistribution, spec: &BucketSpec) -> [f64; 3] {
    [
        dist.conditional_mean(f64::NEG_INFINITY, spec.low).unwrap_or(spec.low),
        dist.conditional_mean(spec.low, spec.high).unwrap_or(0.5 * (spec.low + spec.high)),
        dist.conditional_mean(spec.high, f64::INFINITY).unwrap_or(spec.high),
    ]
}
