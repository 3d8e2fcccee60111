//! The weight-scheme pipeline against a direct per-tree forest estimator,
//! for both honesty modes.
//!
//! `cargo run --release --example scheme_equivalence`

use manifold_cate::data::ManifoldSpec;
use manifold_cate::experiments::{run_scheme_equivalence, ExperimentConfig};

fn main() -> manifold_cate::Result<()> {
    let config = ExperimentConfig {
        manifold: ManifoldSpec::sphere2(6),
        fixed_n: 600,
        ..ExperimentConfig::default()
    };
    let result = run_scheme_equivalence(&config)?;
    for (honesty, point, gap) in &result.gaps {
        println!("{honesty:?} point {point}: gap {gap:.2e}");
    }
    println!("max gap {:.2e}, passed {}", result.max_gap, result.passed);
    Ok(())
}
