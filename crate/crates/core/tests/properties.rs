use manifold_cate::data::{generate_dataset, read_dataset_csv, write_dataset_csv, ManifoldSpec, OutcomeModel};
use manifold_cate::forest::{build_forest, forest_weights};
use manifold_cate::smoother::{cate_at, impute_units, kernel_value, knn_weights, support_units};
use manifold_cate::{
    AdjustmentModel, CateEstimator, Dataset, EstimatorConfig, ForestConfig, Honesty, KernelSpec, WeightScheme,
};
use proptest::prelude::*;
use std::path::Path;

fn sample(n: usize, d: usize, seed: u64) -> Dataset {
    generate_dataset(&ManifoldSpec::circle(d), &OutcomeModel::default(), n, seed)
        .expect("generator")
        .0
}

fn honesty() -> impl Strategy<Value = Honesty> {
    prop_oneof![Just(Honesty::ExtremelyHonest), Just(Honesty::Honest)]
}

fn kernel() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![Just(KernelSpec::BOX), Just(KernelSpec::TRUNCATED_GAUSSIAN)]
}

fn forest_scheme(data: &Dataset, honesty: Honesty, trees: usize, seed: u64, h: f64) -> WeightScheme {
    let config = ForestConfig::default()
        .with_honesty(honesty)
        .with_trees(trees)
        .with_seed(seed);
    WeightScheme::Forest {
        treated: build_forest(data, 1, &config, h, 1).expect("treated forest"),
        control: build_forest(data, 0, &config, h, 1).expect("control forest"),
    }
}

fn estimates(data: &Dataset, scheme: &WeightScheme, kernel: &KernelSpec, h: f64, xs: &[Vec<f64>]) -> Vec<f64> {
    let units = support_units(data, kernel, h, xs);
    let imputed = impute_units(data, scheme, &AdjustmentModel::Zero, &units).expect("imputation");
    xs.iter()
        .map(|x| cate_at(data, &imputed, kernel, h, x).expect("estimate"))
        .collect()
}

fn queries(data: &Dataset, picks: &[usize]) -> Vec<Vec<f64>> {
    picks.iter().map(|&p| data.x(p % data.n()).to_vec()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn forest_rows_sum_to_one(seed in 0u64..1000, n in 40usize..160, d in 2usize..5, trees in 1usize..20, honesty in honesty()) {
        let data = sample(n, d, seed);
        let scheme = forest_scheme(&data, honesty, trees, seed, 0.05);
        for i in 0..data.n() {
            let row = scheme.row(&data, i).unwrap();
            prop_assert!((row.total() - 1.0).abs() <= 1e-12);
            prop_assert!(row.entries.iter().all(|&(j, w)| w > 0.0 && data.treatment(j) != data.treatment(i)));
        }
    }

    #[test]
    fn knn_rows_are_uniform_over_k(seed in 0u64..1000, n in 30usize..120, k in 1usize..8) {
        let data = sample(n, 2, seed);
        let (n1, n0) = data.arm_counts();
        prop_assume!(n1 >= k && n0 >= k);
        for i in 0..data.n() {
            let row = knn_weights(&data, i, k).unwrap();
            prop_assert_eq!(row.entries.len(), k);
            prop_assert!((row.total() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn kernel_vanishes_beyond_reach(a in prop::collection::vec(-2.0f64..2.0, 3), b in prop::collection::vec(-2.0f64..2.0, 3), h in 0.001f64..0.5, kernel in kernel()) {
        let dist = a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let w = kernel_value(&kernel, h, &a, &b).unwrap();
        let back = kernel_value(&kernel, h, &b, &a).unwrap();
        prop_assert_eq!(w, back);
        prop_assert!(w >= 0.0);
        if dist > kernel.reach(h) {
            prop_assert_eq!(w, 0.0);
        }
    }

    #[test]
    fn estimate_ignores_outcomes_of_irrelevant_units(seed in 0u64..1000, picks in prop::collection::vec(0usize..1000, 1..4), kernel in kernel()) {
        let data = sample(120, 3, seed);
        let h = 0.02;
        let xs = queries(&data, &picks);
        let scheme = WeightScheme::Knn { k: 3 };
        let base = estimates(&data, &scheme, &kernel, h, &xs);

        // Units outside every neighbourhood that are not neighbours of any
        // support unit cannot influence the estimate.
        let units = support_units(&data, &kernel, h, &xs);
        let mut used = vec![false; data.n()];
        for &i in &units {
            used[i] = true;
            for &(j, _) in &knn_weights(&data, i, 3).unwrap().entries {
                used[j] = true;
            }
        }
        let y: Vec<f64> = (0..data.n()).map(|i| if used[i] { data.y(i) } else { 1e6 }).collect();
        let perturbed = estimates(&data.with_outcomes(y).unwrap(), &scheme, &kernel, h, &xs);
        prop_assert_eq!(base, perturbed);
    }

    #[test]
    fn knn_shift_and_swap(seed in 0u64..1000, c in -50.0f64..50.0, picks in prop::collection::vec(0usize..1000, 1..4), kernel in kernel()) {
        let data = sample(150, 2, seed);
        let h = 0.05;
        let xs = queries(&data, &picks);
        let scheme = WeightScheme::Knn { k: 4 };
        let base = estimates(&data, &scheme, &kernel, h, &xs);
        let shifted = data.with_outcomes(data.outcomes().iter().map(|y| y + c).collect()).unwrap();
        for (a, b) in estimates(&shifted, &scheme, &kernel, h, &xs).iter().zip(&base) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + c.abs()));
        }
        for (a, b) in estimates(&data.swap_treatment(), &scheme, &kernel, h, &xs).iter().zip(&base) {
            prop_assert!((a + b).abs() <= 1e-12);
        }
    }

    #[test]
    fn forest_weights_follow_a_permutation(seed in 0u64..1000, trees in 1usize..12, honesty in honesty()) {
        let data = sample(80, 3, seed);
        let config = ForestConfig::default().with_honesty(honesty).with_trees(trees).with_seed(seed);
        let treated = build_forest(&data, 1, &config, 0.05, 1).unwrap();
        let mut perm: Vec<usize> = (0..data.n()).collect();
        perm.rotate_left((seed as usize) % data.n());
        let pdata = data.permute(&perm);
        let pt = treated.relabel(&perm);
        for i in data.arm_indices(0) {
            let row = forest_weights(&treated, &data, i).unwrap();
            let prow = forest_weights(&pt, &pdata, perm[i]).unwrap();
            let mut mapped: Vec<(usize, f64)> = row.entries.iter().map(|&(j, w)| (perm[j], w)).collect();
            mapped.sort_by_key(|e| e.0);
            prop_assert_eq!(mapped, prow.entries);
        }
    }

    #[test]
    fn fitting_is_deterministic(seed in 0u64..1000, honesty in honesty()) {
        let data = sample(200, 3, seed);
        let mut config = EstimatorConfig::new(1);
        config.forest = ForestConfig::default().with_honesty(honesty).with_trees(10).with_seed(seed);
        let estimator = CateEstimator::new(config);
        let xs = queries(&data, &[0, 7, 42]);
        let a = estimator.fit(&data, &xs).unwrap().values().unwrap();
        let b = estimator.fit(&data, &xs).unwrap().values().unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip_is_exact(seed in 0u64..1000, n in 10usize..60, d in 2usize..6) {
        let data = sample(n, d, seed);
        let mut buf = Vec::new();
        write_dataset_csv(&data, &mut buf).unwrap();
        let back = read_dataset_csv(buf.as_slice(), Path::new("memory")).unwrap();
        prop_assert_eq!(back, data);
    }
}
