//! The same intrinsic circle sample embedded in R^3, R^10 and R^30: the
//! estimation error tracks the intrinsic dimension, not the ambient one.
//!
//! `cargo run --release --example ambient_invariance [replications]`

use manifold_cate::experiments::{run_ambient_invariance, ExperimentConfig};

fn main() -> manifold_cate::Result<()> {
    let config = ExperimentConfig {
        replications: std::env::args().nth(1).map_or(20, |r| r.parse().expect("integer")),
        ..ExperimentConfig::default()
    };
    let result = run_ambient_invariance(&config)?;
    for (d, mse) in &result.mean_mse {
        println!("d = {d:>2}  mean MSE = {:.5e}", mse.unwrap_or(f64::NAN));
    }
    println!("max/min ratio = {:.3}", result.ratio.unwrap_or(f64::NAN));
    Ok(())
}
