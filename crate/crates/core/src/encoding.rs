//! Feature-to-angle encoding: per-feature standardization followed by a
//! linear rescale that maps the quantile interval [-q, q] onto
//! [-(1-α/2)π, (1-α/2)π], leaving an angular gap of απ on the circle so the
//! 2π-periodicity of rotation angles never wraps distinct inputs together.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Per-feature mean and standard deviation of the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderStats {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl EncoderStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }
}

/// Angular-gap parameter α and quantile bound q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub alpha: f64,
    pub q: f64,
}

impl EncoderConfig {
    pub fn new(alpha: f64, q: f64) -> Result<EncoderConfig> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::OutOfRange {
                what: "alpha",
                range: "(0, 2)",
                got: alpha,
            });
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::OutOfRange {
                what: "q",
                range: "(0, inf)",
                got: q,
            });
        }
        Ok(EncoderConfig { alpha, q })
    }

    /// Scale factor (1 - α/2)·π/q applied to standard scores.
    pub fn scale(&self) -> f64 {
        (1.0 - self.alpha / 2.0) * std::f64::consts::PI / self.q
    }

    /// Half-width of the admissible angle interval, (1 - α/2)·π.
    pub fn bound(&self) -> f64 {
        (1.0 - self.alpha / 2.0) * std::f64::consts::PI
    }
}

impl Default for EncoderConfig {
    /// α = 1/10 (angular gap π/10) and q = 3.
    fn default() -> EncoderConfig {
        EncoderConfig { alpha: 0.1, q: 3.0 }
    }
}

/// Element-wise mean and population standard deviation of the feature rows.
pub fn fit(rows: &[Vec<f64>]) -> Result<EncoderStats> {
    if rows.len() < 2 {
        return Err(Error::Empty("encoder fit needs at least two samples"));
    }
    let dim = rows[0].len();
    for row in rows {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                what: "feature row",
                expected: dim,
                got: row.len(),
            });
        }
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for row in rows {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; dim];
    for row in rows {
        for ((v, m), x) in var.iter_mut().zip(&mean).zip(row) {
            *v += (x - m) * (x - m);
        }
    }
    let mut std = vec![0.0; dim];
    for (i, (s, v)) in std.iter_mut().zip(&var).enumerate() {
        *s = (v / n).sqrt();
        if *s == 0.0 {
            return Err(Error::ConstantFeature(i));
        }
    }
    Ok(EncoderStats { mean, std })
}

/// q = Φ⁻¹(1 − ε^{1/d}/2): the standard-score bound outside which at most an
/// ε fraction of d-dimensional Gaussian-ish samples fall in some coordinate.
pub fn quantile_from_epsilon(epsilon: f64, dim: usize) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfRange {
            what: "epsilon",
            range: "(0, 1)",
            got: epsilon,
        });
    }
    if dim == 0 {
        return Err(Error::Empty("dimension"));
    }
    let p = 1.0 - epsilon.powf(1.0 / dim as f64) / 2.0;
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(p))
}

/// Standard-normal CDF Φ, exposed for round-trip checks against
/// [`quantile_from_epsilon`].
pub fn standard_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

pub fn standard_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// ω_i = (1 − α/2)·(π/q)·(x_i − mean_i)/std_i, clamped to ±(1 − α/2)π.
pub fn encode(x: &[f64], stats: &EncoderStats, config: &EncoderConfig) -> Result<Vec<f64>> {
    if x.len() != stats.dim() {
        return Err(Error::DimensionMismatch {
            what: "feature vector",
            expected: stats.dim(),
            got: x.len(),
        });
    }
    let scale = config.scale();
    let bound = config.bound();
    Ok(x.iter()
        .zip(&stats.mean)
        .zip(&stats.std)
        .map(|((x, m), s)| (scale * (x - m) / s).clamp(-bound, bound))
        .collect())
}

/// How a model maps raw features to circuit angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Encoding {
    /// Standard-score rescale fitted on the training set.
    Standard {
        stats: EncoderStats,
        config: EncoderConfig,
    },
    /// Raw features used as angles directly.
    Identity,
}

impl Encoding {
    pub fn fit_standard(rows: &[Vec<f64>], config: EncoderConfig) -> Result<Encoding> {
        Ok(Encoding::Standard {
            stats: fit(rows)?,
            config,
        })
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Encoding::Standard { stats, config } => encode(x, stats, config),
            Encoding::Identity => Ok(x.to_vec()),
        }
    }
}
