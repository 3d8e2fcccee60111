//! Coverage of 95% CLT intervals with an undersmoothed bandwidth on the
//! circle (m = 1), `h = n^-1`.
//!
//! `cargo run --release --example coverage [replications]`

use manifold_cate::data::ManifoldSpec;
use manifold_cate::experiments::{run_coverage, ExperimentConfig};
use manifold_cate::smoother::BandwidthRegime;

fn main() -> manifold_cate::Result<()> {
    let config = ExperimentConfig {
        manifold: ManifoldSpec::circle(3),
        n_grid: vec![4000],
        regime: BandwidthRegime::Clt,
        replications: std::env::args().nth(1).map_or(200, |r| r.parse().expect("integer")),
        ..ExperimentConfig::default()
    };
    let result = run_coverage(&config)?;
    println!("n = {}, h = {:.3e}, nuisance h = {:.3e}", result.n, result.h, result.h_nuisance);
    for p in &result.points {
        println!(
            "point {}: tau = {:+.4}  coverage = {:.3}  mean half width = {:.4}  failures = {}",
            p.test_point,
            p.tau,
            p.coverage.unwrap_or(f64::NAN),
            p.mean_half_width.unwrap_or(f64::NAN),
            p.failures
        );
    }
    Ok(())
}
