use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};

/// Truncation point of the truncated-Gaussian noise, in units of `scale`.
pub const NOISE_TRUNCATION: f64 = 3.0;

/// Regression surfaces `mu_0`, `mu_1`.
///
/// `Sinusoidal` gives `mu_0(x) = sin(<w0, x>)` and
/// `mu_1(x) = sin(<w0, x>) + cos(<w1, x>)`, where `w0`, `w1` are random
/// directions of norm `scale` drawn in the canonical space from the model
/// seed and pushed through the embedding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceSpec {
    Sinusoidal {
        #[serde(default = "default_surface_scale")]
        scale: f64,
    },
    Constant {
        mu0: f64,
        mu1: f64,
    },
}

fn default_surface_scale() -> f64 {
    1.5
}

impl Default for SurfaceSpec {
    fn default() -> Self {
        Self::Sinusoidal {
            scale: default_surface_scale(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Uniform on `[-scale, scale]`.
    #[default]
    UniformBounded,
    /// `N(0, scale^2)` truncated to `[-3 scale, 3 scale]`.
    TruncatedGaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(default)]
    pub kind: NoiseKind,
    pub scale: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            kind: NoiseKind::UniformBounded,
            scale: 0.5,
        }
    }
}

impl NoiseSpec {
    pub fn zero() -> Self {
        Self {
            kind: NoiseKind::UniformBounded,
            scale: 0.0,
        }
    }

    /// Almost-sure bound on `|U|`.
    pub fn bound(&self) -> f64 {
        match self.kind {
            NoiseKind::UniformBounded => self.scale,
            NoiseKind::TruncatedGaussian => NOISE_TRUNCATION * self.scale,
        }
    }

    pub fn variance(&self) -> f64 {
        let s2 = self.scale * self.scale;
        match self.kind {
            NoiseKind::UniformBounded => s2 / 3.0,
            NoiseKind::TruncatedGaussian => {
                let c = NOISE_TRUNCATION;
                let phi = (-0.5 * c * c).exp() / (2.0 * std::f64::consts::PI).sqrt();
                let mass = erf(c / std::f64::consts::SQRT_2);
                s2 * (1.0 - 2.0 * c * phi / mass)
            }
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        match self.kind {
            NoiseKind::UniformBounded => self.scale * (2.0 * rng.random::<f64>() - 1.0),
            NoiseKind::TruncatedGaussian => loop {
                let z: f64 = rng.sample(StandardNormal);
                if z.abs() <= NOISE_TRUNCATION {
                    break self.scale * z;
                }
            },
        }
    }
}

/// Propensity `e(x) = P(D = 1 | X = x)`.
///
/// `Logistic` is `eta + (1 - 2 eta) logistic(<a, x>)` with `a` a random
/// direction of norm `scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PropensitySpec {
    Logistic {
        #[serde(default = "default_propensity_scale")]
        scale: f64,
    },
    Constant {
        value: f64,
    },
}

fn default_propensity_scale() -> f64 {
    1.0
}

impl Default for PropensitySpec {
    fn default() -> Self {
        Self::Logistic {
            scale: default_propensity_scale(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeModel {
    #[serde(default)]
    pub surface: SurfaceSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub propensity: PropensitySpec,
    /// Overlap margin: `eta <= e(x) <= 1 - eta`.
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Seed for the random directions `w0`, `w1`, `a`.
    #[serde(default)]
    pub seed: u64,
}

fn default_eta() -> f64 {
    0.1
}

impl Default for OutcomeModel {
    fn default() -> Self {
        Self {
            surface: SurfaceSpec::default(),
            noise: NoiseSpec::default(),
            propensity: PropensitySpec::default(),
            eta: default_eta(),
            seed: 0,
        }
    }
}

impl OutcomeModel {
    /// `mu_0 = mu0`, `mu_1 = mu1`, constant propensity, given noise.
    pub fn constant(mu0: f64, mu1: f64, propensity: f64, noise: NoiseSpec) -> Self {
        Self {
            surface: SurfaceSpec::Constant { mu0, mu1 },
            noise,
            propensity: PropensitySpec::Constant { value: propensity },
            eta: default_eta().min(propensity).min(1.0 - propensity),
            seed: 0,
        }
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_propensity(mut self, propensity: PropensitySpec) -> Self {
        self.propensity = propensity;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if !(self.eta > 0.0 && self.eta < 0.5) {
            return bad(format!("overlap margin eta must lie in (0, 1/2), got {}", self.eta));
        }
        if !(self.noise.scale.is_finite() && self.noise.scale >= 0.0) {
            return bad(format!("noise scale must be finite and >= 0, got {}", self.noise.scale));
        }
        match self.surface {
            SurfaceSpec::Sinusoidal { scale } if !scale.is_finite() => {
                return bad("surface scale must be finite".into())
            }
            SurfaceSpec::Constant { mu0, mu1 } if !(mu0.is_finite() && mu1.is_finite()) => {
                return bad("constant surfaces must be finite".into())
            }
            _ => {}
        }
        if let PropensitySpec::Logistic { scale } = self.propensity {
            if !scale.is_finite() {
                return bad("propensity scale must be finite".into());
            }
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}
