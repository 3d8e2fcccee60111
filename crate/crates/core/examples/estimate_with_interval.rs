//! Point estimate and 95% interval on a swiss roll in R^10, with an honest
//! forest and a fitted regression adjustment.
//!
//! `cargo run --release --example estimate_with_interval [n]`

use manifold_cate::data::{generate_dataset, ManifoldSpec, OutcomeModel};
use manifold_cate::estimator::AdjustmentKind;
use manifold_cate::inference::{confidence_interval, estimate_nuisance, kernel_constants, sigma_hat, NuisanceOptions};
use manifold_cate::smoother::{default_bandwidth, BandwidthRegime};
use manifold_cate::{CateEstimator, EstimatorConfig, ForestConfig, Honesty};

fn main() -> manifold_cate::Result<()> {
    let n = std::env::args().nth(1).map_or(4000, |n| n.parse().expect("integer"));
    let m = 2;
    let (data, truth) = generate_dataset(&ManifoldSpec::swiss_roll(10), &OutcomeModel::default(), n, 11)?;
    let xs = truth.test_points(3, 5);

    let config = EstimatorConfig {
        regime: BandwidthRegime::Clt,
        forest: ForestConfig::default().with_honesty(Honesty::Honest).with_trees(500),
        adjustment: AdjustmentKind::Fitted { h_mu: None },
        ..EstimatorConfig::new(m)
    };
    let estimator = CateEstimator::new(config.clone());
    let fit = estimator.fit(&data, &xs)?;

    let h_nuisance = default_bandwidth(n, m, BandwidthRegime::Mse, 1.0);
    let constants = kernel_constants(&config.kernel, m);
    for (x, tau_hat) in xs.iter().zip(fit.values()?) {
        let nu = estimate_nuisance(&data, &fit.adjustment, &config.kernel, h_nuisance, m, x, &NuisanceOptions::default())?;
        let ci = confidence_interval(tau_hat, sigma_hat(&nu, &constants), n, fit.h, m, 0.95)?;
        println!(
            "tau = {:+.4}  tau_hat = {tau_hat:+.4}  95% CI [{:+.4}, {:+.4}]",
            truth.tau(x),
            ci.lower(),
            ci.upper()
        );
    }
    Ok(())
}
