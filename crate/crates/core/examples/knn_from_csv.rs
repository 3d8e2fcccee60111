//! Round trip through the CSV format, then a kNN-matching estimate with the
//! truncated Gaussian kernel.
//!
//! `cargo run --release --example knn_from_csv [k]`

use manifold_cate::data::{generate_dataset, load_dataset_csv, save_dataset_csv, ManifoldSpec, OutcomeModel};
use manifold_cate::estimator::SchemeKind;
use manifold_cate::{CateEstimator, EstimatorConfig, KernelSpec};

fn main() -> manifold_cate::Result<()> {
    let k = std::env::args().nth(1).map_or(10, |k| k.parse().expect("integer"));
    let (data, truth) = generate_dataset(&ManifoldSpec::circle(5), &OutcomeModel::default(), 3000, 3)?;
    let path = std::env::temp_dir().join("manifold_cate_knn_example.csv");
    save_dataset_csv(&data, &path)?;
    let loaded = load_dataset_csv(&path)?;
    assert_eq!(loaded, data);

    let estimator = CateEstimator::new(EstimatorConfig {
        kernel: KernelSpec::TRUNCATED_GAUSSIAN,
        scheme: SchemeKind::Knn { k },
        ..EstimatorConfig::new(1)
    });
    for x in truth.test_points(4, 1) {
        println!("tau = {:+.4}  tau_hat = {:+.4}", truth.tau(&x), estimator.estimate(&loaded, &x)?);
    }
    std::fs::remove_file(path)?;
    Ok(())
}
