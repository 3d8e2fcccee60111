//! Forest weights without adjustment against kNN weights with the true
//! regression surfaces, from n = 500 to n = 8000.
//!
//! `cargo run --release --example double_robustness [seed pairs]`

use manifold_cate::data::ManifoldSpec;
use manifold_cate::experiments::{run_double_robustness, ExperimentConfig, Regime};

fn main() -> manifold_cate::Result<()> {
    let config = ExperimentConfig {
        manifold: ManifoldSpec::circle(3),
        n_grid: vec![500, 8000],
        replications: std::env::args().nth(1).map_or(10, |r| r.parse().expect("integer")),
        ..ExperimentConfig::default()
    };
    let result = run_double_robustness(&config)?;
    for regime in Regime::ALL {
        let s = result.summary(regime);
        println!(
            "{:<22} decreasing in {:.0}% of pairs, worst error {:.3e}",
            regime.label(),
            100.0 * s.decreasing_share,
            s.worst_error.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
