use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{GeneratedTruth, ManifoldSpec, OutcomeModel};
use crate::error::{Error, Result};
use crate::estimator::{AdjustmentKind, EstimatorConfig, SchemeKind};
use crate::forest::ForestConfig;
use crate::inference::NuisanceOptions;
use crate::rng;
use crate::smoother::{AdjustmentModel, BandwidthRegime, KernelSpec};

/// Regression adjustment used by an experiment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdjustmentChoice {
    #[default]
    Zero,
    /// The generator's true surfaces.
    Oracle,
    Fitted {
        #[serde(default)]
        h_mu: Option<f64>,
    },
}

/// One JSON document describing a Monte-Carlo experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub manifold: ManifoldSpec,
    pub model: OutcomeModel,
    pub n_grid: Vec<usize>,
    /// Sample size of single-n experiments (ambient, equivalence).
    pub fixed_n: usize,
    pub replications: usize,
    /// Replication seeds; when absent, derived from `seed`.
    pub seeds: Option<Vec<u64>>,
    pub seed: u64,
    pub forest: ForestConfig,
    pub kernel: KernelSpec,
    pub regime: BandwidthRegime,
    pub c_h: f64,
    /// Fixed estimation bandwidth overriding `regime` and `c_h`.
    pub h: Option<f64>,
    pub test_points: usize,
    pub test_point_seed: u64,
    pub adjustment: AdjustmentChoice,
    pub scheme: SchemeKind,
    /// Neighbours of the kNN scheme in the double-robustness check.
    pub knn_k: usize,
    /// Nominal coverage level of confidence intervals.
    pub level: f64,
    pub nuisance: NuisanceOptions,
    pub ambient_dims: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            manifold: ManifoldSpec::circle(10),
            model: OutcomeModel::default(),
            n_grid: vec![500, 1000, 2000, 4000, 8000],
            fixed_n: 2000,
            replications: 20,
            seeds: None,
            seed: 0,
            forest: ForestConfig::default(),
            kernel: KernelSpec::default(),
            regime: BandwidthRegime::Mse,
            c_h: 1.0,
            h: None,
            test_points: 5,
            test_point_seed: 2024,
            adjustment: AdjustmentChoice::Zero,
            scheme: SchemeKind::Forest,
            knn_k: 10,
            level: 0.95,
            nuisance: NuisanceOptions::default(),
            ambient_dims: vec![3, 10, 30],
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.manifold.validate()?;
        self.model.validate()?;
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("n_grid must be nonempty and strictly increasing".into()));
        }
        if self.n_grid[0] < 10 || self.fixed_n < 10 {
            return Err(Error::InvalidConfig("sample sizes must be at least 10".into()));
        }
        if self.replication_seeds().is_empty() {
            return Err(Error::InvalidConfig("need at least one replication".into()));
        }
        if self.test_points == 0 {
            return Err(Error::InvalidConfig("need at least one test point".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidConfig(format!("level must lie in (0, 1), got {}", self.level)));
        }
        if self.knn_k == 0 {
            return Err(Error::InvalidConfig("knn_k must be at least 1".into()));
        }
        if self.ambient_dims.iter().any(|&d| d < self.manifold.canonical_dim()) {
            return Err(Error::InvalidConfig(format!(
                "ambient dimensions must be at least {}",
                self.manifold.canonical_dim()
            )));
        }
        self.estimator_config().validate()
    }

    pub fn m(&self) -> usize {
        self.manifold.m
    }

    /// Explicit `seeds`, or `replications` seeds derived from `seed`.
    pub fn replication_seeds(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.replications as u64).map(|r| rng::derive(self.seed, &[r])).collect(),
        }
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        EstimatorConfig {
            m: self.m(),
            kernel: self.kernel,
            h: self.h,
            regime: self.regime,
            c_h: self.c_h,
            forest: self.forest.clone(),
            scheme: self.scheme,
            adjustment: match self.adjustment {
                AdjustmentChoice::Fitted { h_mu } => AdjustmentKind::Fitted { h_mu },
                _ => AdjustmentKind::Zero,
            },
        }
    }

    /// Estimator for one replication: the forest seed is tied to the
    /// replication so that runs differ only through their seeds.
    pub(crate) fn replication_estimator(&self, seed: u64, n: usize) -> EstimatorConfig {
        let mut config = self.estimator_config();
        config.forest.seed = rng::derive(self.forest.seed, &[seed, n as u64, 0xF0]);
        config
    }

    pub(crate) fn data_seed(seed: u64, n: usize) -> u64 {
        rng::derive(seed, &[n as u64])
    }

    pub(crate) fn oracle_or(&self, truth: &GeneratedTruth) -> Option<AdjustmentModel> {
        matches!(self.adjustment, AdjustmentChoice::Oracle).then(|| AdjustmentModel::oracle(truth))
    }
}
