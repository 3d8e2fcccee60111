//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any fails. `ACCEPTANCE_ONLY=1,5` restricts the run.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use common::{oracle_cate, ForestCase, SmallInstance};
use manifold_cate::data::{DensityKind, ManifoldSpec, OutcomeModel, PropensitySpec};
use manifold_cate::experiments::{
    run_ambient_invariance, run_coverage, run_double_robustness, run_mse_sweep, run_variance_check, scheme_gap,
    ExperimentConfig, Regime,
};
use manifold_cate::forest::forest_weights;
use manifold_cate::inference::{kernel_constants, sigma_from_density, sigma_hat, NuisanceEstimates};
use manifold_cate::smoother::{cate_at, impute_units, support_units, BandwidthRegime};
use manifold_cate::{AdjustmentModel, CateEstimator, EstimatorConfig, ForestConfig, KernelSpec, WeightScheme};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (usize, &'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn criterion_1() -> Outcome {
    let config = ExperimentConfig::default();
    let result = run_mse_sweep(&config).expect("sweep runs");
    let slope = result.slope.as_ref().map(|s| s.slope);
    let target = -2.0 / 3.0;
    let in_band = slope.is_some_and(|s| (s - target).abs() <= 0.35);
    let means: Vec<String> = result
        .mean_mse
        .iter()
        .map(|(n, m)| format!("{n}:{:.3e}", m.unwrap_or(f64::NAN)))
        .collect();
    Outcome {
        passed: in_band && result.strictly_decreasing(),
        detail: format!(
            "slope {:.3} in [{:.3}, {:.3}], strictly decreasing {} ({})",
            slope.unwrap_or(f64::NAN),
            target - 0.35,
            target + 0.35,
            result.strictly_decreasing(),
            means.join(" ")
        ),
    }
}

fn criterion_2() -> Outcome {
    let config = ExperimentConfig {
        fixed_n: 2000,
        ambient_dims: vec![3, 10, 30],
        ..ExperimentConfig::default()
    };
    let result = run_ambient_invariance(&config).expect("ambient runs");
    let means: Vec<f64> = result.mean_mse.iter().map(|p| p.1.expect("every d estimated")).collect();
    let ratio = means.iter().copied().fold(f64::MIN, f64::max) / means.iter().copied().fold(f64::MAX, f64::min);
    Outcome {
        passed: ratio < 2.0,
        detail: format!(
            "max/min MSE ratio {ratio:.3} < 2 (d=3: {:.3e}, d=10: {:.3e}, d=30: {:.3e})",
            means[0], means[1], means[2]
        ),
    }
}

fn criterion_3() -> Outcome {
    let config = ExperimentConfig {
        manifold: ManifoldSpec::circle(3),
        n_grid: vec![4000],
        regime: BandwidthRegime::Clt,
        replications: 200,
        level: 0.95,
        forest: ForestConfig {
            c_leaf: 4.0,
            ..ForestConfig::default()
        },
        ..ExperimentConfig::default()
    };
    let result = run_coverage(&config).expect("coverage runs");
    assert!((result.h - 1.0 / 4000.0).abs() < 1e-15);
    let cov: Vec<f64> = result.points.iter().map(|p| p.coverage.unwrap_or(f64::NAN)).collect();
    Outcome {
        passed: result.all_within(0.88, 0.99),
        detail: format!(
            "coverage {:?} within [0.88, 0.99]",
            cov.iter().map(|c| format!("{c:.3}")).collect::<Vec<_>>()
        ),
    }
}

fn criterion_4() -> Outcome {
    let config = ExperimentConfig {
        n_grid: vec![500, 8000],
        replications: 10,
        ..ExperimentConfig::default()
    };
    let result = run_double_robustness(&config).expect("double robustness runs");
    let one = result.summary(Regime::ForestZero);
    let two = result.summary(Regime::KnnOracle);
    let exact = result.summary(Regime::KnnOracleNoiseless);
    let worst_exact = exact.worst_error.unwrap_or(f64::INFINITY);
    Outcome {
        passed: one.decreasing_share >= 0.8 && two.decreasing_share >= 0.8 && exact.failures == 0 && worst_exact <= 1e-10,
        detail: format!(
            "regime I decreasing {:.0}%, regime II decreasing {:.0}% (need >= 80%), noiseless regime II max error {worst_exact:.2e} <= 1e-10",
            100.0 * one.decreasing_share,
            100.0 * two.decreasing_share
        ),
    }
}

fn criterion_5() -> Outcome {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for seed in 0..10u64 {
        let inst = SmallInstance::random(1000 + seed);
        let treated = inst.library_forest(1);
        let control = inst.library_forest(0);
        let kernel = KernelSpec { profile: inst.profile };
        let estimator = CateEstimator::new(EstimatorConfig {
            kernel,
            ..EstimatorConfig::new(1)
        });
        let fit = estimator
            .fit_with(
                &inst.data,
                &inst.queries,
                inst.h,
                WeightScheme::Forest { treated, control },
                AdjustmentModel::Zero,
            )
            .expect("pipeline runs");
        for (x, est) in inst.queries.iter().zip(&fit.estimates) {
            let oracle = oracle_cate(&inst.data, &inst.treated, &inst.control, inst.profile, inst.h, x).expect("nonempty");
            worst = worst.max((est.as_ref().expect("nonempty") - oracle).abs());
            checked += 1;
        }
    }
    Outcome {
        passed: worst <= 1e-12,
        detail: format!("max |pipeline - brute force| {worst:.2e} <= 1e-12 over {checked} queries on 10 instances"),
    }
}

fn criterion_6() -> Outcome {
    let mut failures: Vec<String> = Vec::new();
    for seed in 0..50u64 {
        let case = ForestCase::random(seed);
        let data = &case.data;
        let h = case.h;
        let kernel = case.kernel;
        let xs = &case.queries;
        let scheme = WeightScheme::Forest {
            treated: case.treated.clone(),
            control: case.control.clone(),
        };
        let all: Vec<usize> = (0..data.n()).collect();
        let rows = scheme.rows(data, &all).expect("rows");

        // Row normalisation.
        let dev = rows.iter().map(|r| (r.total() - 1.0).abs()).fold(0.0, f64::max);
        if dev > 1e-12 {
            failures.push(format!("config {seed}: row sum deviation {dev:.2e}"));
        }

        let tau = |d: &manifold_cate::Dataset, s: &WeightScheme| -> Vec<f64> {
            let units = support_units(d, &kernel, h, xs);
            let imputed = impute_units(d, s, &AdjustmentModel::Zero, &units).expect("imputation");
            xs.iter().map(|x| cate_at(d, &imputed, &kernel, h, x).expect("estimate")).collect()
        };
        let base = tau(data, &scheme);

        // Outcome shift.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: f64 = rng.random_range(-10.0..10.0);
        let shifted = data.with_outcomes(data.outcomes().iter().map(|y| y + c).collect()).unwrap();
        let gap = tau(&shifted, &scheme).iter().zip(&base).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if gap > 1e-12 {
            failures.push(format!("config {seed}: shift changed tau_hat by {gap:.2e}"));
        }

        // Treatment swap with the forests exchanged.
        let swapped = WeightScheme::Forest {
            treated: case.control.with_arm(1),
            control: case.treated.with_arm(0),
        };
        let flipped = tau(&data.swap_treatment(), &swapped);
        if flipped.iter().zip(&base).any(|(a, b)| *a != -*b) {
            failures.push(format!("config {seed}: swap is not an exact negation"));
        }

        // Weight-scheme pipeline against the direct forest estimator.
        let g = scheme_gap(data, &case.treated, &case.control, &kernel, h, xs).expect("direct estimator");
        if g > 1e-12 {
            failures.push(format!("config {seed}: scheme gap {g:.2e}"));
        }

        // Permutation equivariance of the weights.
        let mut perm: Vec<usize> = (0..data.n()).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let pdata = data.permute(&perm);
        let (pt, pc) = (case.treated.relabel(&perm), case.control.relabel(&perm));
        for row in &rows {
            let i = row.unit;
            let forest = if pdata.treatment(perm[i]) == 1 { &pc } else { &pt };
            let prow = forest_weights(forest, &pdata, perm[i]).expect("permuted row");
            let mut mapped: Vec<(usize, f64)> = row.entries.iter().map(|&(j, w)| (perm[j], w)).collect();
            mapped.sort_by_key(|e| e.0);
            if mapped != prow.entries {
                failures.push(format!("config {seed}: unit {i} weights differ after permutation"));
                break;
            }
        }
    }
    Outcome {
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            "normalisation, shift, swap, scheme equivalence and permutation hold on 50 configurations".into()
        } else {
            failures.join("; ")
        },
    }
}

fn criterion_7() -> Outcome {
    let config = ExperimentConfig {
        manifold: ManifoldSpec::circle(3).with_density(DensityKind::Uniform),
        model: OutcomeModel::default().with_propensity(PropensitySpec::Constant { value: 0.5 }),
        fixed_n: 100_000,
        ..ExperimentConfig::default()
    };
    let result = run_variance_check(&config).expect("variance check runs");
    // Box kernel in one dimension: c_K = K2 = 2, f = 1/(2 pi), e = 1/2,
    // sigma^2 = 1/12, so Sigma = 2 / (4 / (2 pi)) * (1/6 + 1/6) = pi / 3.
    let closed = PI / 3.0;
    let worst = result
        .records
        .iter()
        .map(|r| {
            assert!((r.sigma_true - closed).abs() < 1e-12);
            (r.sigma_hat - closed).abs() / closed
        })
        .fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut identity = 0.0f64;
    for _ in 0..20 {
        let m = rng.random_range(1..=3usize);
        let kernel = if rng.random::<bool>() {
            KernelSpec::BOX
        } else {
            KernelSpec::TRUNCATED_GAUSSIAN
        };
        let constants = kernel_constants(&kernel, m);
        let (f, e) = (rng.random_range(0.05..3.0), rng.random_range(0.05..0.95));
        let (s1, s0) = (rng.random_range(0.01..2.0), rng.random_range(0.01..2.0));
        let nu = NuisanceEstimates {
            a_hat: constants.c_k * f,
            e_hat: e,
            s0_sq: s0,
            s1_sq: s1,
            floored: false,
        };
        let direct = (s1 / e + s0 / (1.0 - e)) * constants.k2 / (constants.c_k * constants.c_k * f);
        let rearranged = sigma_hat(&nu, &constants);
        identity = identity.max((rearranged - direct).abs() / direct);
        identity = identity.max((sigma_from_density(&constants, f, e, s1, s0) - direct).abs() / direct);
    }
    Outcome {
        passed: worst <= 0.35 && identity <= 1e-12,
        detail: format!(
            "max relative error of Sigma_hat vs pi/3 {worst:.3} <= 0.35; rearrangement identity {identity:.1e} <= 1e-12"
        ),
    }
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect());
    let criteria: [Criterion; 7] = [
        (1, "manifold-rate adaptation", criterion_1),
        (2, "ambient invariance", criterion_2),
        (3, "CLT coverage", criterion_3),
        (4, "double robustness", criterion_4),
        (5, "small-instance oracle equivalence", criterion_5),
        (6, "invariant suite", criterion_6),
        (7, "variance plug-in", criterion_7),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let verdict = if outcome.passed { "PASS" } else { "FAIL" };
        println!(
            "[{verdict}] criterion {id} ({name}): {} [{:.1}s]",
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
        if !outcome.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
