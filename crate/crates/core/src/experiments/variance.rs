use rayon::prelude::*;
use serde::Serialize;

use super::config::{AdjustmentChoice, ExperimentConfig};
use super::{experiment_test_points, replicate};
use crate::error::{Error, Result};
use crate::inference::{estimate_nuisance, kernel_constants, sigma_from_density, sigma_hat, NuisanceEstimates};
use crate::smoother::{default_adjustment_bandwidth, default_bandwidth, fit_adjustment, AdjustmentModel, BandwidthRegime};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarianceRecord {
    pub test_point: usize,
    pub x: Vec<f64>,
    pub sigma_true: f64,
    pub sigma_hat: f64,
    pub relative_error: f64,
    pub nuisance: NuisanceEstimates,
}

#[derive(Clone, Debug, Serialize)]
pub struct VarianceResult {
    pub n: usize,
    pub h_nuisance: f64,
    pub records: Vec<VarianceRecord>,
    pub max_relative_error: f64,
}

/// Plug-in `Sigma_hat(x)` against the closed-form `Sigma(x)` at the test
/// points, on one dataset of size `fixed_n` drawn with the first seed.
pub fn run_variance_check(config: &ExperimentConfig) -> Result<VarianceResult> {
    config.validate()?;
    let n = config.fixed_n;
    let m = config.m();
    let seed = config.replication_seeds()[0];
    let (data, truth) = replicate(&config.manifold, &config.model, n, seed)?;
    let xs = experiment_test_points(config)?;
    let h = default_bandwidth(n, m, BandwidthRegime::Mse, 1.0);
    let constants = kernel_constants(&config.kernel, m);
    let adjustment = match config.adjustment {
        AdjustmentChoice::Oracle => AdjustmentModel::oracle(&truth),
        AdjustmentChoice::Fitted { h_mu } => {
            fit_adjustment(&data, &config.kernel, h_mu.unwrap_or_else(|| default_adjustment_bandwidth(n, m)))?
        }
        AdjustmentChoice::Zero => fit_adjustment(&data, &config.kernel, default_adjustment_bandwidth(n, m))?,
    };
    let records = xs
        .par_iter()
        .enumerate()
        .map(|(t, x)| {
            let f = truth
                .density(x)
                .ok_or_else(|| Error::InvalidConfig("manifold has no closed-form density".into()))?;
            let e = truth.propensity(x);
            let sigma_true = sigma_from_density(&constants, f, e, truth.sigma_sq(1, x), truth.sigma_sq(0, x));
            let nuisance = estimate_nuisance(&data, &adjustment, &config.kernel, h, m, x, &config.nuisance)?;
            let s = sigma_hat(&nuisance, &constants);
            Ok(VarianceRecord {
                test_point: t,
                x: x.clone(),
                sigma_true,
                sigma_hat: s,
                relative_error: (s - sigma_true).abs() / sigma_true,
                nuisance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_relative_error = records.iter().map(|r| r.relative_error).fold(0.0, f64::max);
    Ok(VarianceResult {
        n,
        h_nuisance: h,
        records,
        max_relative_error,
    })
}
