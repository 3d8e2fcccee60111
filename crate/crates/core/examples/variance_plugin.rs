//! Plug-in asymptotic variance against its closed form on the uniform
//! circle with a constant propensity of one half.
//!
//! `cargo run --release --example variance_plugin [n]`

use manifold_cate::data::{DensityKind, ManifoldSpec, OutcomeModel, PropensitySpec};
use manifold_cate::experiments::{run_variance_check, ExperimentConfig};

fn main() -> manifold_cate::Result<()> {
    let config = ExperimentConfig {
        manifold: ManifoldSpec::circle(3).with_density(DensityKind::Uniform),
        model: OutcomeModel::default().with_propensity(PropensitySpec::Constant { value: 0.5 }),
        fixed_n: std::env::args().nth(1).map_or(100_000, |n| n.parse().expect("integer")),
        ..ExperimentConfig::default()
    };
    let result = run_variance_check(&config)?;
    for r in &result.records {
        println!(
            "point {}: Sigma = {:.4}  Sigma_hat = {:.4}  relative error = {:.3}",
            r.test_point, r.sigma_true, r.sigma_hat, r.relative_error
        );
    }
    Ok(())
}
