//! Grows one arm's forest and checks every leaf against the diameter bound.
//! Prints the first tree as JSON with `--dump`.
//!
//! `cargo run --release --example forest_leaves [--dump]`

use manifold_cate::data::{generate_dataset, ManifoldSpec, OutcomeModel};
use manifold_cate::forest::{build_forest, leaf_diameter_check};
use manifold_cate::smoother::{default_bandwidth, BandwidthRegime};
use manifold_cate::{ForestConfig, Honesty};

fn main() -> manifold_cate::Result<()> {
    let (data, _) = generate_dataset(&ManifoldSpec::circle(4), &OutcomeModel::default(), 2000, 8)?;
    let h = default_bandwidth(data.n(), 1, BandwidthRegime::Mse, 1.0);
    for honesty in [Honesty::ExtremelyHonest, Honesty::Honest] {
        let config = ForestConfig::default().with_honesty(honesty).with_trees(200);
        let forest = build_forest(&data, 1, &config, h, 1)?;
        let report = leaf_diameter_check(&forest, &data, h, &config, 1);
        println!(
            "{honesty:?}: {} leaf checks, max diameter {:.4} <= bound {:.4}: {}",
            report.leaves_checked, report.max_diameter, report.bound, report.passed
        );
        if std::env::args().any(|a| a == "--dump") {
            println!("{}", serde_json::to_string_pretty(&forest.dump_tree(0, &data)).expect("json"));
        }
    }
    Ok(())
}
