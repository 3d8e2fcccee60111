use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::{experiment_test_points, replicate};
use crate::data::{Dataset, NoiseSpec};
use crate::error::Result;
use crate::estimator::{CateEstimator, SchemeKind};
use crate::smoother::{AdjustmentModel, KernelSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Forest weights, zero adjustment.
    ForestZero,
    /// kNN weights, oracle adjustment.
    KnnOracle,
    /// kNN weights, oracle adjustment, noiseless outcomes; the error is
    /// measured against the kernel average of the true effect.
    KnnOracleNoiseless,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::ForestZero, Regime::KnnOracle, Regime::KnnOracleNoiseless];

    pub fn label(self) -> &'static str {
        match self {
            Self::ForestZero => "forest_zero",
            Self::KnnOracle => "knn_oracle",
            Self::KnnOracleNoiseless => "knn_oracle_noiseless",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DrRecord {
    pub regime: Regime,
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    /// Max over test points of `|tau_hat(x) - target(x)|`.
    pub max_abs_error: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeSummary {
    pub regime: Regime,
    /// Share of replications whose error at the largest `n` is below the
    /// error at the smallest `n`.
    pub decreasing_share: f64,
    pub worst_error: Option<f64>,
    pub failures: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DrResult {
    pub config: ExperimentConfig,
    pub records: Vec<DrRecord>,
    pub summaries: Vec<RegimeSummary>,
}

impl DrResult {
    pub fn summary(&self, regime: Regime) -> &RegimeSummary {
        self.summaries.iter().find(|s| s.regime == regime).expect("every regime is summarised")
    }
}

/// Kernel average of `values` around `x`.
fn kernel_average(data: &Dataset, kernel: &KernelSpec, h: f64, x: &[f64], values: &[f64]) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, v) in values.iter().enumerate() {
        let k = kernel.weight(h, data.x(i), x);
        num += k * v;
        den += k;
    }
    (den > 0.0).then(|| num / den)
}

/// Runs both double-robustness regimes, plus the noiseless kNN check, on
/// every `(n, replication)` of the config.
pub fn run_double_robustness(config: &ExperimentConfig) -> Result<DrResult> {
    config.validate()?;
    let xs = experiment_test_points(config)?;
    let seeds = config.replication_seeds();
    let noiseless_model = config.model.clone().with_noise(NoiseSpec::zero());

    let seed_list = &seeds;
    let jobs: Vec<(Regime, usize, usize, u64)> = Regime::ALL
        .iter()
        .flat_map(|&g| {
            config
                .n_grid
                .iter()
                .flat_map(move |&n| seed_list.iter().enumerate().map(move |(r, &s)| (g, n, r, s)))
        })
        .collect();

    let records: Vec<DrRecord> = jobs
        .par_iter()
        .map(|&(regime, n, replication, seed)| {
            let result = (|| -> Result<f64> {
                let model = if regime == Regime::KnnOracleNoiseless {
                    &noiseless_model
                } else {
                    &config.model
                };
                let (data, truth) = replicate(&config.manifold, model, n, seed)?;
                let mut est = config.replication_estimator(seed, n);
                let estimator = match regime {
                    Regime::ForestZero => {
                        est.scheme = SchemeKind::Forest;
                        CateEstimator::new(est).with_adjustment(AdjustmentModel::Zero)
                    }
                    _ => {
                        est.scheme = SchemeKind::Knn { k: config.knn_k };
                        CateEstimator::new(est).with_adjustment(AdjustmentModel::oracle(&truth))
                    }
                };
                let fit = estimator.fit(&data, &xs)?;
                let taus: Vec<f64> = (0..data.n()).map(|i| truth.tau(data.x(i))).collect();
                let mut worst = 0.0f64;
                for (x, e) in xs.iter().zip(fit.values()?) {
                    let target = if regime == Regime::KnnOracleNoiseless {
                        kernel_average(&data, &config.kernel, fit.h, x, &taus).unwrap_or(f64::NAN)
                    } else {
                        truth.tau(x)
                    };
                    worst = worst.max((e - target).abs());
                }
                Ok(worst)
            })();
            DrRecord {
                regime,
                n,
                replication,
                seed,
                max_abs_error: result.as_ref().ok().copied(),
                error: result.err().map(|e| e.to_string()),
            }
        })
        .collect();

    let (first, last) = (config.n_grid[0], *config.n_grid.last().unwrap());
    let summaries = Regime::ALL
        .iter()
        .map(|&regime| {
            let mine: Vec<&DrRecord> = records.iter().filter(|r| r.regime == regime).collect();
            let at = |n: usize, rep: usize| {
                mine.iter()
                    .find(|r| r.n == n && r.replication == rep)
                    .and_then(|r| r.max_abs_error)
            };
            let wins = (0..seeds.len())
                .filter(|&rep| matches!((at(first, rep), at(last, rep)), (Some(a), Some(b)) if b < a))
                .count();
            let failures = mine.iter().filter(|r| r.max_abs_error.is_none()).count();
            RegimeSummary {
                regime,
                decreasing_share: wins as f64 / seeds.len() as f64,
                worst_error: (failures < mine.len())
                    .then(|| mine.iter().filter_map(|r| r.max_abs_error).fold(0.0, f64::max)),
                failures,
            }
        })
        .collect();

    Ok(DrResult {
        config: config.clone(),
        records,
        summaries,
    })
}
