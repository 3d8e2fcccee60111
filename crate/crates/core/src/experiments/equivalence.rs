use serde::Serialize;

use super::config::ExperimentConfig;
use super::{experiment_test_points, replicate};
use crate::data::dataset::sq_dist;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::{build_forest, nearest_opposite, Forest, Honesty};
use crate::smoother::{impute_units, support_units, AdjustmentModel, KernelSpec, WeightScheme};

/// Leaf-by-leaf imputation of unit `i` from `forest`: the average over
/// trees of the mean outcome of the subsample points sharing `X_i`'s leaf.
fn direct_imputation(forest: &Forest, data: &Dataset, i: usize) -> Result<f64> {
    let xi = data.x(i);
    let mut total = 0.0;
    let mut used = 0usize;
    for (b, tree) in forest.trees().iter().enumerate() {
        let leaf = tree.leaf_of(xi);
        let reach = tree.diameter_bound() * (1.0 + 1e-9);
        let mut sum = 0.0;
        let mut count = 0usize;
        for &j in forest.subsample(b) {
            if reach.is_finite() && sq_dist(xi, data.x(j)) > reach * reach {
                continue;
            }
            if tree.leaf_of(data.x(j)).same_cell(&leaf) {
                sum += data.y(j);
                count += 1;
            }
        }
        if count >= forest.min_leaf() {
            total += sum / count as f64;
            used += 1;
        }
    }
    if used > 0 {
        return Ok(total / used as f64);
    }
    let j = nearest_opposite(data, i, forest.arm()).ok_or(Error::EmptyArm(forest.arm()))?;
    Ok(data.y(j))
}

/// `tau_hat_RF(x)` computed straight from the forest definition, without
/// weight rows: every unit's missing outcome is the tree-averaged leaf mean
/// of the opposite arm's forest.
pub fn direct_forest_cate(
    data: &Dataset,
    treated: &Forest,
    control: &Forest,
    kernel: &KernelSpec,
    h: f64,
    x: &[f64],
) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..data.n() {
        let k = kernel.weight(h, data.x(i), x);
        if k == 0.0 {
            continue;
        }
        let contrast = if data.treatment(i) == 1 {
            data.y(i) - direct_imputation(control, data, i)?
        } else {
            direct_imputation(treated, data, i)? - data.y(i)
        };
        num += k * contrast;
        den += k;
    }
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(Error::EmptyNeighborhood)
    }
}

/// Largest gap between the weight-scheme estimate and the direct forest
/// estimate over `xs`.
pub fn scheme_gap(
    data: &Dataset,
    treated: &Forest,
    control: &Forest,
    kernel: &KernelSpec,
    h: f64,
    xs: &[Vec<f64>],
) -> Result<f64> {
    let scheme = WeightScheme::Forest {
        treated: treated.clone(),
        control: control.clone(),
    };
    let units = support_units(data, kernel, h, xs);
    let imputed = impute_units(data, &scheme, &AdjustmentModel::Zero, &units)?;
    let mut gap = 0.0f64;
    for x in xs {
        let framework = crate::smoother::cate_at(data, &imputed, kernel, h, x)?;
        let direct = direct_forest_cate(data, treated, control, kernel, h, x)?;
        gap = gap.max((framework - direct).abs());
    }
    Ok(gap)
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceResult {
    pub n: usize,
    pub tolerance: f64,
    /// `(honesty, replication, max gap)`.
    pub gaps: Vec<(Honesty, usize, f64)>,
    pub max_gap: f64,
    pub passed: bool,
}

/// Compares the weight-scheme pipeline with the direct forest transcription
/// on the same forests, for both honesty modes, at `fixed_n`.
pub fn run_scheme_equivalence(config: &ExperimentConfig) -> Result<EquivalenceResult> {
    config.validate()?;
    let n = config.fixed_n;
    let xs = experiment_test_points(config)?;
    let tolerance = 1e-12;
    let mut gaps = Vec::new();
    for honesty in [Honesty::ExtremelyHonest, Honesty::Honest] {
        for (r, &seed) in config.replication_seeds().iter().enumerate() {
            let (data, _) = replicate(&config.manifold, &config.model, n, seed)?;
            let mut est = config.replication_estimator(seed, n);
            est.forest.honesty = honesty;
            let h = est.bandwidth_for(n);
            let treated = build_forest(&data, 1, &est.forest, h, est.m)?;
            let control = build_forest(&data, 0, &est.forest, h, est.m)?;
            // Query points whose neighbourhood is empty carry no comparison.
            let usable: Vec<Vec<f64>> = xs
                .iter()
                .filter(|x| (0..data.n()).any(|i| est.kernel.weight(h, data.x(i), x) > 0.0))
                .cloned()
                .collect();
            gaps.push((honesty, r, scheme_gap(&data, &treated, &control, &est.kernel, h, &usable)?));
        }
    }
    let max_gap = gaps.iter().map(|g| g.2).fold(0.0, f64::max);
    Ok(EquivalenceResult {
        n,
        tolerance,
        passed: max_gap <= tolerance,
        gaps,
        max_gap,
    })
}
