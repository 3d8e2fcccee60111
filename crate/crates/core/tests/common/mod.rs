//! Independent brute-force evaluation of the forest estimator on small,
//! fully enumerable instances, plus random instance generators.
#![allow(dead_code)]

use manifold_cate::forest::{BoundingBox, ExplicitNode, Forest, Honesty, PartitionTree};
use manifold_cate::{Dataset, KernelProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A hand-rolled axis-aligned tree, kept separate from the library's
/// representation.
#[derive(Clone, Debug)]
pub enum OTree {
    Leaf,
    Cut(usize, f64, Box<OTree>, Box<OTree>),
}

impl OTree {
    /// Left/right path to the leaf holding `x`; `x[c] < v` goes left.
    pub fn path(&self, x: &[f64]) -> Vec<bool> {
        let mut out = Vec::new();
        let mut node = self;
        while let OTree::Cut(c, v, l, r) = node {
            let right = x[*c] >= *v;
            out.push(right);
            node = if right { r } else { l };
        }
        out
    }

    pub fn to_explicit(&self) -> ExplicitNode {
        match self {
            OTree::Leaf => ExplicitNode::Leaf,
            OTree::Cut(c, v, l, r) => ExplicitNode::split(*c, *v, l.to_explicit(), r.to_explicit()),
        }
    }

    pub fn random(rng: &mut ChaCha8Rng, d: usize, depth: usize, anchors: &[f64]) -> OTree {
        if depth == 0 || rng.random::<f64>() < 0.25 {
            return OTree::Leaf;
        }
        let c = rng.random_range(0..d);
        // Cut exactly at a data coordinate now and then to exercise the
        // half-open convention.
        let v = if !anchors.is_empty() && rng.random::<f64>() < 0.3 {
            anchors[rng.random_range(0..anchors.len())]
        } else {
            rng.random::<f64>()
        };
        OTree::Cut(
            c,
            v,
            Box::new(OTree::random(rng, d, depth - 1, anchors)),
            Box::new(OTree::random(rng, d, depth - 1, anchors)),
        )
    }
}

pub struct OracleForest {
    pub trees: Vec<OTree>,
    pub sets: Vec<Vec<usize>>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// `K(||a - b|| / sqrt(h))` written out per profile.
pub fn oracle_kernel(profile: KernelProfile, h: f64, a: &[f64], b: &[f64]) -> f64 {
    let u2 = dist2(a, b) / h;
    match profile {
        KernelProfile::Box => {
            if u2 <= 1.0 {
                1.0
            } else {
                0.0
            }
        }
        KernelProfile::TruncatedGaussian => {
            if u2 <= 9.0 {
                (-0.5 * u2).exp()
            } else {
                0.0
            }
        }
    }
}

/// Missing potential outcome of unit `i` from the opposite arm's forest:
/// average over trees (dropping empty leaves) of the leaf mean of the
/// subsample; nearest neighbour when every tree drops.
pub fn oracle_impute(data: &Dataset, forest: &OracleForest, i: usize) -> f64 {
    let xi = data.x(i);
    let mut terms = Vec::new();
    for (tree, set) in forest.trees.iter().zip(&forest.sets) {
        let leaf = tree.path(xi);
        let members: Vec<usize> = set.iter().copied().filter(|&j| tree.path(data.x(j)) == leaf).collect();
        if !members.is_empty() {
            terms.push(members.iter().map(|&j| data.y(j)).sum::<f64>() / members.len() as f64);
        }
    }
    if terms.is_empty() {
        let other = 1 - data.treatment(i);
        let mut best: Option<(f64, usize)> = None;
        for j in 0..data.n() {
            if data.treatment(j) != other {
                continue;
            }
            let dj = dist2(xi, data.x(j));
            if best.is_none_or(|(bd, _)| dj < bd) {
                best = Some((dj, j));
            }
        }
        return data.y(best.expect("opposite arm nonempty").1);
    }
    terms.iter().sum::<f64>() / terms.len() as f64
}

/// Kernel-smoothed contrast of potential outcomes at `x`.
pub fn oracle_cate(
    data: &Dataset,
    treated: &OracleForest,
    control: &OracleForest,
    profile: KernelProfile,
    h: f64,
    x: &[f64],
) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..data.n() {
        let k = oracle_kernel(profile, h, data.x(i), x);
        if k == 0.0 {
            continue;
        }
        let (y1, y0) = if data.treatment(i) == 1 {
            (data.y(i), oracle_impute(data, control, i))
        } else {
            (oracle_impute(data, treated, i), data.y(i))
        };
        num += k * (y1 - y0);
        den += k;
    }
    (den > 0.0).then(|| num / den)
}

/// A small instance: data in `[0, 1)^d`, `B <= 3` hand-enumerable trees per
/// arm over random nonempty subsamples.
pub struct SmallInstance {
    pub data: Dataset,
    pub treated: OracleForest,
    pub control: OracleForest,
    pub h: f64,
    pub profile: KernelProfile,
    pub queries: Vec<Vec<f64>>,
}

impl SmallInstance {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(1..=2);
        let n = rng.random_range(4..=8);
        let mut treatment: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<bool>())).collect();
        treatment[0] = 1;
        treatment[1] = 0;
        let x: Vec<f64> = (0..n * d).map(|_| (rng.random::<f64>() * 1000.0).floor() / 1000.0).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let data = Dataset::new(d, x.clone(), treatment.clone(), y).unwrap();
        let forest = |arm: u8, rng: &mut ChaCha8Rng| {
            let units: Vec<usize> = (0..n).filter(|&i| treatment[i] == arm).collect();
            let b = rng.random_range(1..=3);
            let trees = (0..b).map(|_| OTree::random(rng, d, 3, &x)).collect();
            let sets = (0..b)
                .map(|_| {
                    let mut s: Vec<usize> = units.iter().copied().filter(|_| rng.random::<f64>() < 0.7).collect();
                    if s.is_empty() {
                        s.push(units[rng.random_range(0..units.len())]);
                    }
                    s
                })
                .collect();
            OracleForest { trees, sets }
        };
        let treated = forest(1, &mut rng);
        let control = forest(0, &mut rng);
        let profile = if rng.random::<bool>() {
            KernelProfile::Box
        } else {
            KernelProfile::TruncatedGaussian
        };
        let h = rng.random_range(0.02..0.5);
        let queries = (0..3).map(|_| data.x(rng.random_range(0..n)).to_vec()).collect();
        Self {
            data,
            treated,
            control,
            h,
            profile,
            queries,
        }
    }

    /// The same forests in the library's representation.
    pub fn library_forest(&self, arm: u8) -> Forest {
        let of = if arm == 1 { &self.treated } else { &self.control };
        let d = self.data.dim();
        let trees = of
            .trees
            .iter()
            .map(|t| PartitionTree::explicit(BoundingBox::unit(d), &t.to_explicit()))
            .collect();
        Forest::from_parts(arm, self.data.n(), trees, of.sets.clone(), Honesty::ExtremelyHonest, self.h, 1).unwrap()
    }
}

/// A generated dataset with forests grown by the library, for invariant
/// checks that hold the partitions fixed.
pub struct ForestCase {
    pub data: Dataset,
    pub treated: Forest,
    pub control: Forest,
    pub h: f64,
    pub kernel: manifold_cate::KernelSpec,
    pub queries: Vec<Vec<f64>>,
}

impl ForestCase {
    pub fn random(seed: u64) -> Self {
        use manifold_cate::data::generate_dataset;
        use manifold_cate::forest::build_forest;
        use manifold_cate::{ForestConfig, KernelSpec, ManifoldSpec, OutcomeModel};

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC0FFEE);
        let d = rng.random_range(2..=4);
        let (spec, m) = if rng.random::<bool>() {
            (ManifoldSpec::circle(d), 1)
        } else {
            let m = rng.random_range(1..=2);
            (ManifoldSpec::flat(m, d), m)
        };
        let spec = spec.with_embedding_seed(rng.random());
        let n = rng.random_range(40..=150);
        let (data, truth) = generate_dataset(&spec, &OutcomeModel::default().with_seed(rng.random()), n, rng.random()).unwrap();
        let h = rng.random_range(0.01..0.2);
        let honesty = if rng.random::<bool>() {
            Honesty::Honest
        } else {
            Honesty::ExtremelyHonest
        };
        let mut config = ForestConfig::default()
            .with_seed(rng.random())
            .with_trees(rng.random_range(3..=25))
            .with_honesty(honesty);
        config.c_leaf = rng.random_range(0.5..3.0);
        if honesty == Honesty::Honest {
            config.min_leaf = rng.random_range(1..=2);
        }
        let treated = build_forest(&data, 1, &config, h, m).unwrap();
        let control = build_forest(&data, 0, &config, h, m).unwrap();
        let kernel = if rng.random::<bool>() {
            KernelSpec::BOX
        } else {
            KernelSpec::TRUNCATED_GAUSSIAN
        };
        let mut queries: Vec<Vec<f64>> = (0..3).map(|_| data.x(rng.random_range(0..n)).to_vec()).collect();
        queries.extend(truth.test_points(2, rng.random()));
        queries.retain(|x| (0..data.n()).any(|i| kernel.weight(h, data.x(i), x) > 0.0));
        Self {
            data,
            treated,
            control,
            h,
            kernel,
            queries,
        }
    }
}
