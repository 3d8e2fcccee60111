use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::{keyed_mean, replicate, test_points_for};
use crate::error::{Error, Result};
use crate::estimator::CateEstimator;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmbientRecord {
    pub d: usize,
    pub replication: usize,
    pub seed: u64,
    pub mse: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AmbientResult {
    pub config: ExperimentConfig,
    pub n: usize,
    pub records: Vec<AmbientRecord>,
    /// `(d, mean MSE)`.
    pub mean_mse: Vec<(usize, Option<f64>)>,
    /// Largest over smallest mean MSE across `d`.
    pub ratio: Option<f64>,
}

/// Re-embeds the same intrinsic samples into each ambient dimension of
/// `ambient_dims` and reports the mean MSE per dimension at `fixed_n`.
pub fn run_ambient_invariance(config: &ExperimentConfig) -> Result<AmbientResult> {
    config.validate()?;
    if config.ambient_dims.is_empty() {
        return Err(Error::InvalidConfig("ambient_dims is empty".into()));
    }
    let n = config.fixed_n;
    let seeds = config.replication_seeds();
    let mut specs = Vec::new();
    for &d in &config.ambient_dims {
        let mut spec = config.manifold.clone();
        spec.d = d;
        spec.validate()?;
        let xs = test_points_for(config, &spec)?;
        specs.push((spec, xs));
    }
    let jobs: Vec<(usize, usize, u64)> = (0..specs.len())
        .flat_map(|k| seeds.iter().enumerate().map(move |(r, &s)| (k, r, s)))
        .collect();
    let records: Vec<AmbientRecord> = jobs
        .par_iter()
        .map(|&(k, replication, seed)| {
            let (spec, xs) = &specs[k];
            let result = (|| -> Result<f64> {
                let (data, truth) = replicate(spec, &config.model, n, seed)?;
                let mut estimator = CateEstimator::new(config.replication_estimator(seed, n));
                if let Some(adj) = config.oracle_or(&truth) {
                    estimator = estimator.with_adjustment(adj);
                }
                let values = estimator.fit(&data, xs)?.values()?;
                let sse: f64 = xs.iter().zip(&values).map(|(x, v)| (v - truth.tau(x)).powi(2)).sum();
                Ok(sse / xs.len() as f64)
            })();
            AmbientRecord {
                d: spec.d,
                replication,
                seed,
                mse: result.as_ref().ok().copied(),
                error: result.err().map(|e| e.to_string()),
            }
        })
        .collect();

    let mean_mse: Vec<(usize, Option<f64>)> = config
        .ambient_dims
        .iter()
        .map(|&d| {
            let pairs = records.iter().filter(|r| r.d == d).filter_map(|r| r.mse.map(|v| (r.seed, v))).collect();
            (d, keyed_mean(pairs))
        })
        .collect();
    let means: Option<Vec<f64>> = mean_mse.iter().map(|p| p.1).collect();
    let ratio = means.and_then(|m| {
        let hi = m.iter().copied().fold(f64::MIN, f64::max);
        let lo = m.iter().copied().fold(f64::MAX, f64::min);
        (lo > 0.0).then(|| hi / lo)
    });
    Ok(AmbientResult {
        config: config.clone(),
        n,
        records,
        mean_mse,
        ratio,
    })
}
