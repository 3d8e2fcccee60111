use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::{experiment_test_points, keyed_mean, replicate};
use crate::error::{Error, Result};
use crate::estimator::CateEstimator;

/// One `(n, replication, test point)` estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    pub test_point: usize,
    pub tau: f64,
    pub tau_hat: Option<f64>,
    pub sq_error: Option<f64>,
    pub error: Option<String>,
}

/// One `(n, replication)` cell: the mean squared error over test points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepCell {
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    pub h: f64,
    pub mse: Option<f64>,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// `None` with only two points.
    pub stderr: Option<f64>,
    pub points_used: usize,
    pub excluded: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub records: Vec<SweepRecord>,
    pub cells: Vec<SweepCell>,
    /// `(n, mean MSE over successful replications)`.
    pub mean_mse: Vec<(usize, Option<f64>)>,
    pub slope: Option<SlopeFit>,
    pub target_slope: f64,
    pub warnings: Vec<String>,
}

impl SweepResult {
    /// Mean MSE strictly decreases along the grid.
    pub fn strictly_decreasing(&self) -> bool {
        let means: Option<Vec<f64>> = self.mean_mse.iter().map(|p| p.1).collect();
        means.is_some_and(|m| m.windows(2).all(|w| w[1] < w[0]))
    }

    /// Share of replications with a smaller MSE at the last grid point
    /// than at the first.
    pub fn improving_share(&self) -> f64 {
        let (first, last) = (self.config.n_grid[0], *self.config.n_grid.last().unwrap());
        let mse_at = |n: usize, r: usize| self.cells.iter().find(|c| c.n == n && c.replication == r).and_then(|c| c.mse);
        let reps = self.config.replication_seeds().len();
        let wins = (0..reps)
            .filter(|&r| matches!((mse_at(first, r), mse_at(last, r)), (Some(a), Some(b)) if b < a))
            .count();
        wins as f64 / reps as f64
    }
}

/// Least-squares slope of `log(mse)` on `log(n)`; cells with nonpositive or
/// missing MSE are excluded and listed.
pub fn fit_rate_slope(points: &[(usize, Option<f64>)]) -> Result<SlopeFit> {
    let mut excluded = Vec::new();
    let mut xy = Vec::new();
    for &(n, mse) in points {
        match mse {
            Some(v) if v > 0.0 && v.is_finite() => xy.push(((n as f64).ln(), v.ln())),
            _ => excluded.push(n),
        }
    }
    if xy.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "slope fit needs two grid points with positive MSE, have {}",
            xy.len()
        )));
    }
    let k = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / k;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidConfig("slope fit needs distinct n".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = (xy.len() > 2).then(|| {
        let ssr: f64 = xy.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (ssr / (k - 2.0) / sxx).sqrt()
    });
    Ok(SlopeFit {
        slope,
        intercept,
        stderr,
        points_used: xy.len(),
        excluded,
    })
}

/// MSE of `tau_hat` at the fixed test points for every `(n, replication)`.
pub fn run_mse_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let xs = experiment_test_points(config)?;
    let seeds = config.replication_seeds();
    let jobs: Vec<(usize, usize, u64)> = config
        .n_grid
        .iter()
        .flat_map(|&n| seeds.iter().enumerate().map(move |(r, &s)| (n, r, s)))
        .collect();

    let outcomes: Vec<(SweepCell, Vec<SweepRecord>)> = jobs
        .par_iter()
        .map(|&(n, r, seed)| sweep_cell(config, &xs, n, r, seed))
        .collect();

    let mut records = Vec::new();
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    for (cell, recs) in outcomes {
        if cell.failures > 0 {
            warnings.push(format!("n={} replication {}: {} failed test points", cell.n, cell.replication, cell.failures));
        }
        records.extend(recs);
        cells.push(cell);
    }
    let mean_mse: Vec<(usize, Option<f64>)> = config
        .n_grid
        .iter()
        .map(|&n| {
            let pairs = cells.iter().filter(|c| c.n == n).filter_map(|c| c.mse.map(|v| (c.seed, v))).collect();
            (n, keyed_mean(pairs))
        })
        .collect();
    for &(n, m) in &mean_mse {
        if !matches!(m, Some(v) if v > 0.0) {
            warnings.push(format!("n={n}: mean MSE is zero or missing; excluded from the slope fit"));
        }
    }
    let slope = if config.n_grid.len() >= 2 {
        match fit_rate_slope(&mean_mse) {
            Ok(s) => Some(s),
            Err(e) => {
                warnings.push(e.to_string());
                None
            }
        }
    } else {
        None
    };
    Ok(SweepResult {
        config: config.clone(),
        records,
        cells,
        mean_mse,
        slope,
        target_slope: -2.0 / (config.m() as f64 + 2.0),
        warnings,
    })
}

fn sweep_cell(config: &ExperimentConfig, xs: &[Vec<f64>], n: usize, r: usize, seed: u64) -> (SweepCell, Vec<SweepRecord>) {
    let record = |t: usize, tau: f64| SweepRecord {
        n,
        replication: r,
        seed,
        test_point: t,
        tau,
        tau_hat: None,
        sq_error: None,
        error: None,
    };
    let fail = |message: String, h: f64| {
        let recs = (0..xs.len())
            .map(|t| SweepRecord {
                error: Some(message.clone()),
                ..record(t, f64::NAN)
            })
            .collect();
        (
            SweepCell {
                n,
                replication: r,
                seed,
                h,
                mse: None,
                failures: xs.len(),
            },
            recs,
        )
    };
    let est_config = config.replication_estimator(seed, n);
    let h = est_config.bandwidth_for(n);
    let (data, truth) = match replicate(&config.manifold, &config.model, n, seed) {
        Ok(v) => v,
        Err(e) => return fail(e.to_string(), h),
    };
    let mut estimator = CateEstimator::new(est_config);
    if let Some(adj) = config.oracle_or(&truth) {
        estimator = estimator.with_adjustment(adj);
    }
    let fit = match estimator.fit(&data, xs) {
        Ok(f) => f,
        Err(e) => return fail(e.to_string(), h),
    };
    let mut recs = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    let mut ok = 0usize;
    for (t, (x, est)) in xs.iter().zip(&fit.estimates).enumerate() {
        let tau = truth.tau(x);
        let mut rec = record(t, tau);
        match est {
            Ok(v) => {
                let se = (v - tau).powi(2);
                rec.tau_hat = Some(*v);
                rec.sq_error = Some(se);
                sum += se;
                ok += 1;
            }
            Err(e) => rec.error = Some(e.to_string()),
        }
        recs.push(rec);
    }
    let cell = SweepCell {
        n,
        replication: r,
        seed,
        h: fit.h,
        mse: (ok > 0).then(|| sum / ok as f64),
        failures: xs.len() - ok,
    };
    (cell, recs)
}
