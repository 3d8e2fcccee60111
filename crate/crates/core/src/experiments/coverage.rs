use rayon::prelude::*;
use serde::Serialize;

use super::config::{AdjustmentChoice, ExperimentConfig};
use super::{experiment_test_points, keyed_mean, replicate};
use crate::data::GeneratedTruth;
use crate::error::{Error, Result};
use crate::estimator::CateEstimator;
use crate::inference::{confidence_interval, estimate_nuisance, kernel_constants, sigma_hat};
use crate::smoother::{default_adjustment_bandwidth, default_bandwidth, fit_adjustment, AdjustmentModel, BandwidthRegime};

/// One `(replication, test point)` interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageRecord {
    pub replication: usize,
    pub seed: u64,
    pub test_point: usize,
    pub tau: f64,
    pub tau_hat: Option<f64>,
    pub sigma_hat: Option<f64>,
    pub half_width: Option<f64>,
    pub covered: Option<bool>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointCoverage {
    pub test_point: usize,
    pub x: Vec<f64>,
    pub tau: f64,
    /// Share of successful replications whose interval holds `tau`.
    pub coverage: Option<f64>,
    pub mean_half_width: Option<f64>,
    pub successes: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverageResult {
    pub config: ExperimentConfig,
    pub n: usize,
    pub h: f64,
    pub h_nuisance: f64,
    pub level: f64,
    pub records: Vec<CoverageRecord>,
    pub points: Vec<PointCoverage>,
}

impl CoverageResult {
    pub fn all_within(&self, lo: f64, hi: f64) -> bool {
        self.points.iter().all(|p| matches!(p.coverage, Some(c) if (lo..=hi).contains(&c)))
    }
}

/// Coverage of the plug-in CLT interval at the fixed test points.
///
/// Uses the last `n_grid` entry. Nuisances (density factor, propensity,
/// residual variances) share the MSE-regime bandwidth; residuals are taken
/// against a fitted adjustment unless the config asks for the oracle.
pub fn run_coverage(config: &ExperimentConfig) -> Result<CoverageResult> {
    config.validate()?;
    if config.h.is_none() && config.regime != BandwidthRegime::Clt {
        return Err(Error::InvalidConfig("coverage needs the clt bandwidth regime or a fixed h".into()));
    }
    let n = *config.n_grid.last().unwrap();
    let m = config.m();
    let xs = experiment_test_points(config)?;
    let reference = GeneratedTruth::new(&config.manifold, &config.model)?;
    let seeds = config.replication_seeds();
    let h = config.estimator_config().bandwidth_for(n);
    let h_nuisance = default_bandwidth(n, m, BandwidthRegime::Mse, 1.0);
    let constants = kernel_constants(&config.kernel, m);

    let per_rep: Vec<Vec<CoverageRecord>> = seeds
        .par_iter()
        .enumerate()
        .map(|(r, &seed)| {
            let blank = |t: usize, tau: f64| CoverageRecord {
                replication: r,
                seed,
                test_point: t,
                tau,
                tau_hat: None,
                sigma_hat: None,
                half_width: None,
                covered: None,
                error: None,
            };
            let fail = |e: Error| -> Vec<CoverageRecord> {
                (0..xs.len())
                    .map(|t| CoverageRecord {
                        error: Some(e.to_string()),
                        ..blank(t, f64::NAN)
                    })
                    .collect()
            };
            let (data, truth) = match replicate(&config.manifold, &config.model, n, seed) {
                Ok(v) => v,
                Err(e) => return fail(e),
            };
            let mut estimator = CateEstimator::new(config.replication_estimator(seed, n));
            if let Some(adj) = config.oracle_or(&truth) {
                estimator = estimator.with_adjustment(adj);
            }
            let fit = match estimator.fit(&data, &xs) {
                Ok(f) => f,
                Err(e) => return fail(e),
            };
            let residual_model = match config.adjustment {
                AdjustmentChoice::Oracle => AdjustmentModel::oracle(&truth),
                AdjustmentChoice::Fitted { .. } => fit.adjustment.clone(),
                AdjustmentChoice::Zero => {
                    match fit_adjustment(&data, &config.kernel, default_adjustment_bandwidth(n, m)) {
                        Ok(a) => a,
                        Err(e) => return fail(e),
                    }
                }
            };
            xs.iter()
                .zip(&fit.estimates)
                .enumerate()
                .map(|(t, (x, est))| {
                    let tau = truth.tau(x);
                    let mut rec = blank(t, tau);
                    let outcome = est.as_ref().map_err(|e| e.to_string()).and_then(|&tau_hat| {
                        let nu = estimate_nuisance(&data, &residual_model, &config.kernel, h_nuisance, m, x, &config.nuisance)
                            .map_err(|e| e.to_string())?;
                        let sigma = sigma_hat(&nu, &constants);
                        let ci = confidence_interval(tau_hat, sigma, n, fit.h, m, config.level).map_err(|e| e.to_string())?;
                        Ok((tau_hat, sigma, ci))
                    });
                    match outcome {
                        Ok((tau_hat, sigma, ci)) => {
                            rec.tau_hat = Some(tau_hat);
                            rec.sigma_hat = Some(sigma);
                            rec.half_width = Some(ci.half_width);
                            rec.covered = Some(ci.contains(tau));
                        }
                        Err(e) => rec.error = Some(e),
                    }
                    rec
                })
                .collect()
        })
        .collect();
    let records: Vec<CoverageRecord> = per_rep.into_iter().flatten().collect();

    let points = xs
        .iter()
        .enumerate()
        .map(|(t, x)| {
            let mine: Vec<&CoverageRecord> = records.iter().filter(|r| r.test_point == t).collect();
            let ok: Vec<&&CoverageRecord> = mine.iter().filter(|r| r.covered.is_some()).collect();
            let hits = ok.iter().filter(|r| r.covered == Some(true)).count();
            PointCoverage {
                test_point: t,
                x: x.clone(),
                tau: reference.tau(x),
                coverage: (!ok.is_empty()).then(|| hits as f64 / ok.len() as f64),
                mean_half_width: keyed_mean(ok.iter().map(|r| (r.seed, r.half_width.unwrap())).collect()),
                successes: ok.len(),
                failures: mine.len() - ok.len(),
            }
        })
        .collect();

    Ok(CoverageResult {
        config: config.clone(),
        n,
        h,
        h_nuisance,
        level: config.level,
        records,
        points,
    })
}
