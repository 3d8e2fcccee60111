//! MSE sweep on a circle embedded in R^10 and the fitted log-log slope.
//!
//! `cargo run --release --example rate_sweep [replications]`

use manifold_cate::experiments::{run_mse_sweep, ExperimentConfig};

fn main() -> manifold_cate::Result<()> {
    let mut config = ExperimentConfig::default();
    if let Some(r) = std::env::args().nth(1) {
        config.replications = r.parse().expect("replications must be an integer");
    }
    let start = std::time::Instant::now();
    let result = run_mse_sweep(&config)?;
    for (n, mse) in &result.mean_mse {
        println!("n = {n:>5}  mean MSE = {}", mse.map_or("-".into(), |v| format!("{v:.5e}")));
    }
    if let Some(fit) = &result.slope {
        println!("slope {:.3} (target {:.3})", fit.slope, result.target_slope);
    }
    println!("strictly decreasing: {}", result.strictly_decreasing());
    eprintln!("{:.1?}", start.elapsed());
    Ok(())
}
