//! Monte-Carlo harness: rate sweeps, coverage, double robustness, ambient
//! invariance and scheme equivalence, with serialisable configs and results.

mod ambient;
mod config;
mod coverage;
mod equivalence;
mod output;
mod robustness;
mod sweep;
mod variance;

pub use ambient::{run_ambient_invariance, AmbientRecord, AmbientResult};
pub use config::{AdjustmentChoice, ExperimentConfig};
pub use coverage::{run_coverage, CoverageRecord, CoverageResult, PointCoverage};
pub use equivalence::{direct_forest_cate, run_scheme_equivalence, scheme_gap, EquivalenceResult};
pub use output::{write_csv, write_json, write_plot};
pub use robustness::{run_double_robustness, DrRecord, DrResult, Regime, RegimeSummary};
pub use sweep::{fit_rate_slope, run_mse_sweep, SlopeFit, SweepCell, SweepRecord, SweepResult};
pub use variance::{run_variance_check, VarianceRecord, VarianceResult};

use crate::data::{generate_dataset, Dataset, GeneratedTruth, ManifoldSpec, OutcomeModel};
use crate::error::Result;

/// Interior test points shared by every replication of an experiment.
pub fn experiment_test_points(config: &ExperimentConfig) -> Result<Vec<Vec<f64>>> {
    test_points_for(config, &config.manifold)
}

fn test_points_for(config: &ExperimentConfig, spec: &ManifoldSpec) -> Result<Vec<Vec<f64>>> {
    Ok(GeneratedTruth::new(spec, &config.model)?.test_points(config.test_points, config.test_point_seed))
}

fn replicate(spec: &ManifoldSpec, model: &OutcomeModel, n: usize, seed: u64) -> Result<(Dataset, GeneratedTruth)> {
    generate_dataset(spec, model, n, ExperimentConfig::data_seed(seed, n))
}

/// Mean of `values` summed in ascending order of `keys`, so the result does
/// not depend on the order replications were listed or finished in.
fn keyed_mean(mut pairs: Vec<(u64, f64)>) -> Option<f64> {
    if pairs.is_empty() {
        return None;
    }
    pairs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Some(pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64)
}
