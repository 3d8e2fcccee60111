//! End-to-end CATE estimation: bandwidth, weights, imputation, smoothing.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::{build_forest, ForestConfig};
use crate::smoother::{
    cate_at, default_adjustment_bandwidth, default_bandwidth, fit_adjustment, impute_units, support_units,
    AdjustmentModel, BandwidthRegime, ImputedOutcomes, KernelSpec, WeightScheme,
};

/// Which linear smoother imputes the missing potential outcome.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchemeKind {
    #[default]
    Forest,
    Knn {
        k: usize,
    },
}

/// Regression adjustment derivable from the data alone.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdjustmentKind {
    #[default]
    Zero,
    Fitted {
        #[serde(default)]
        h_mu: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    /// Intrinsic dimension of the covariate support.
    pub m: usize,
    pub kernel: KernelSpec,
    /// Fixed bandwidth; when absent `c_h n^(-exponent)` from `regime`.
    pub h: Option<f64>,
    pub regime: BandwidthRegime,
    pub c_h: f64,
    pub forest: ForestConfig,
    pub scheme: SchemeKind,
    pub adjustment: AdjustmentKind,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            m: 1,
            kernel: KernelSpec::default(),
            h: None,
            regime: BandwidthRegime::Mse,
            c_h: 1.0,
            forest: ForestConfig::default(),
            scheme: SchemeKind::Forest,
            adjustment: AdjustmentKind::Zero,
        }
    }
}

impl EstimatorConfig {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            ..Self::default()
        }
    }

    pub fn bandwidth_for(&self, n: usize) -> f64 {
        self.h.unwrap_or_else(|| default_bandwidth(n, self.m, self.regime, self.c_h))
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        if let Some(h) = self.h {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::NonPositiveBandwidth(h));
            }
        }
        if !(self.c_h > 0.0 && self.c_h.is_finite()) {
            return Err(Error::InvalidConfig(format!("c_h must be positive, got {}", self.c_h)));
        }
        if let SchemeKind::Knn { k: 0 } = self.scheme {
            return Err(Error::InvalidConfig("knn needs k >= 1".into()));
        }
        if let AdjustmentKind::Fitted { h_mu: Some(h) } = self.adjustment {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::NonPositiveBandwidth(h));
            }
        }
        if self.scheme == SchemeKind::Forest {
            self.forest.validate(self.m)?;
        }
        Ok(())
    }
}

/// Result of one estimation run at a list of query points.
#[derive(Debug)]
pub struct CateFit {
    pub h: f64,
    pub scheme: WeightScheme,
    pub adjustment: AdjustmentModel,
    pub imputed: ImputedOutcomes,
    /// `tau_hat` per query point; empty neighbourhoods are per-point errors.
    pub estimates: Vec<Result<f64>>,
}

impl CateFit {
    /// Estimates that succeeded, or the first failure.
    pub fn values(&self) -> Result<Vec<f64>> {
        self.estimates
            .iter()
            .map(|r| match r {
                Ok(v) => Ok(*v),
                Err(Error::EmptyNeighborhood) => Err(Error::EmptyNeighborhood),
                Err(Error::MissingImputation(i)) => Err(Error::MissingImputation(*i)),
                Err(Error::NonPositiveBandwidth(h)) => Err(Error::NonPositiveBandwidth(*h)),
                Err(e) => Err(Error::InvalidDataset(e.to_string())),
            })
            .collect()
    }
}

/// Kernel-smoothed imputation estimator of `tau(x)`.
#[derive(Clone, Debug, Default)]
pub struct CateEstimator {
    config: EstimatorConfig,
    adjustment: Option<AdjustmentModel>,
}

impl CateEstimator {
    pub fn new(config: EstimatorConfig) -> Self {
        Self {
            config,
            adjustment: None,
        }
    }

    /// Uses `adjustment` instead of the one named in the config, e.g. an
    /// oracle built from known surfaces.
    pub fn with_adjustment(mut self, adjustment: AdjustmentModel) -> Self {
        self.adjustment = Some(adjustment);
        self
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    /// Weight scheme for `data` at bandwidth `h`; forests are grown here.
    pub fn build_scheme(&self, data: &Dataset, h: f64) -> Result<WeightScheme> {
        match self.config.scheme {
            SchemeKind::Forest => {
                let treated = build_forest(data, 1, &self.config.forest, h, self.config.m)?;
                let control = build_forest(data, 0, &self.config.forest, h, self.config.m)?;
                Ok(WeightScheme::Forest { treated, control })
            }
            SchemeKind::Knn { k } => Ok(WeightScheme::Knn { k }),
        }
    }

    pub fn build_adjustment(&self, data: &Dataset) -> Result<AdjustmentModel> {
        if let Some(adj) = &self.adjustment {
            return Ok(adj.clone());
        }
        match self.config.adjustment {
            AdjustmentKind::Zero => Ok(AdjustmentModel::Zero),
            AdjustmentKind::Fitted { h_mu } => {
                let h_mu = h_mu.unwrap_or_else(|| default_adjustment_bandwidth(data.n(), self.config.m));
                fit_adjustment(data, &self.config.kernel, h_mu)
            }
        }
    }

    /// Estimates `tau_hat` at every point of `xs`, imputing only the units
    /// inside the kernel support of some query point.
    pub fn fit(&self, data: &Dataset, xs: &[Vec<f64>]) -> Result<CateFit> {
        self.config.validate()?;
        data.ensure_valid()?;
        if let Some(x) = xs.iter().find(|x| x.len() != data.dim()) {
            return Err(Error::InvalidConfig(format!(
                "query point has {} coordinates, data has {}",
                x.len(),
                data.dim()
            )));
        }
        let h = self.config.bandwidth_for(data.n());
        let scheme = self.build_scheme(data, h)?;
        let adjustment = self.build_adjustment(data)?;
        self.fit_with(data, xs, h, scheme, adjustment)
    }

    /// As [`fit`](Self::fit) with a prebuilt scheme and adjustment.
    pub fn fit_with(
        &self,
        data: &Dataset,
        xs: &[Vec<f64>],
        h: f64,
        scheme: WeightScheme,
        adjustment: AdjustmentModel,
    ) -> Result<CateFit> {
        let kernel = self.config.kernel;
        let units = support_units(data, &kernel, h, xs);
        let imputed = impute_units(data, &scheme, &adjustment, &units)?;
        let estimates = xs.iter().map(|x| cate_at(data, &imputed, &kernel, h, x)).collect();
        Ok(CateFit {
            h,
            scheme,
            adjustment,
            imputed,
            estimates,
        })
    }

    /// `tau_hat(x)` at a single point.
    pub fn estimate(&self, data: &Dataset, x: &[f64]) -> Result<f64> {
        let mut fit = self.fit(data, &[x.to_vec()])?;
        fit.estimates.pop().expect("one query point")
    }
}
