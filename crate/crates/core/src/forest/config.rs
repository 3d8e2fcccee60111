use serde::{Deserialize, Serialize};

use super::tree::BoundingBox;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Honesty {
    /// Splits at structure-half medians; leaves hold estimation-half points.
    Honest,
    /// Splits drawn independently of the data.
    #[default]
    ExtremelyHonest,
}

pub const MAX_TREES_DEFAULT: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    /// Subsample size per tree; `floor(arm_size^0.9)` when absent.
    pub subsample: Option<usize>,
    /// Trees per arm; `min(n, 2000)` when absent.
    pub trees: Option<usize>,
    /// Diameter exponent; leaves satisfy `diam <= c_leaf * h^(1/2 + epsilon)`.
    pub epsilon: Option<f64>,
    pub c_leaf: f64,
    pub honesty: Honesty,
    /// Minimum estimation points for a leaf to contribute weights.
    pub min_leaf: usize,
    pub seed: u64,
    /// Depth cap on any root-to-leaf path; `64 * d` when absent.
    pub max_depth: Option<usize>,
    /// Fixed partition box. When absent the data box expanded by 1% of each
    /// coordinate's range is used.
    pub bounding_box: Option<BoundingBox>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            subsample: None,
            trees: None,
            epsilon: None,
            c_leaf: 1.0,
            honesty: Honesty::ExtremelyHonest,
            min_leaf: 1,
            seed: 0,
            max_depth: None,
            bounding_box: None,
        }
    }
}

impl ForestConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trees(mut self, trees: usize) -> Self {
        self.trees = Some(trees);
        self
    }

    pub fn with_honesty(mut self, honesty: Honesty) -> Self {
        self.honesty = honesty;
        self
    }

    pub fn with_subsample(mut self, s: usize) -> Self {
        self.subsample = Some(s);
        self
    }

    pub fn default_epsilon(m: usize) -> f64 {
        (0.1f64).min(1.0 / (2.0 * (m as f64 + 2.0)))
    }

    pub fn epsilon_for(&self, m: usize) -> f64 {
        self.epsilon.unwrap_or_else(|| Self::default_epsilon(m))
    }

    pub fn subsample_for(&self, arm_size: usize) -> usize {
        self.subsample
            .unwrap_or_else(|| ((arm_size as f64).powf(0.9).floor() as usize).max(1))
    }

    pub fn trees_for(&self, n: usize) -> usize {
        self.trees.unwrap_or_else(|| n.min(MAX_TREES_DEFAULT)).max(1)
    }

    pub fn max_depth_for(&self, d: usize) -> usize {
        self.max_depth.unwrap_or(64 * d.max(1))
    }

    /// `c_leaf * h^(1/2 + epsilon)`.
    pub fn diameter_bound(&self, h: f64, m: usize) -> f64 {
        self.c_leaf * h.powf(0.5 + self.epsilon_for(m))
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        let eps = self.epsilon_for(m);
        let upper = 1.0 / (m as f64 + 2.0);
        if !(eps > 0.0 && eps < upper) {
            return Err(Error::InvalidConfig(format!(
                "epsilon = {eps} must lie in (0, 1/(m+2)) = (0, {upper})"
            )));
        }
        if !(self.c_leaf.is_finite() && self.c_leaf > 0.0) {
            return Err(Error::InvalidConfig(format!("c_leaf must be positive, got {}", self.c_leaf)));
        }
        if self.trees == Some(0) {
            return Err(Error::InvalidConfig("need at least one tree".into()));
        }
        if self.subsample == Some(0) {
            return Err(Error::InvalidConfig("subsample size must be at least 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidConfig("min_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_dimension() {
        assert_eq!(ForestConfig::default_epsilon(1), 0.1);
        assert!((ForestConfig::default_epsilon(5) - 1.0 / 14.0).abs() < 1e-15);
        let c = ForestConfig::default();
        assert_eq!(c.trees_for(500), 500);
        assert_eq!(c.trees_for(10_000), 2000);
        assert_eq!(c.subsample_for(1000), 501);
        assert!(c.validate(1).is_ok());
    }

    #[test]
    fn epsilon_out_of_range_rejected() {
        let c = ForestConfig {
            epsilon: Some(0.4),
            ..ForestConfig::default()
        };
        assert!(c.validate(1).is_err());
        assert!(c.validate(2).is_err());
    }
}
