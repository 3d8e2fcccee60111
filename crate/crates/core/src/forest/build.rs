use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use super::config::{ForestConfig, Honesty};
use super::tree::{cell_diameter, BoundingBox, Cell, Node, PartitionTree};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng;

/// `B` partition trees grown on subsamples of one treatment arm.
#[derive(Clone, Debug)]
pub struct Forest {
    arm: u8,
    honesty: Honesty,
    h: f64,
    n: usize,
    min_leaf: usize,
    max_depth: usize,
    trees: Vec<PartitionTree>,
    /// Per tree, the sorted indices whose outcomes the leaves average
    /// (the whole subsample, or its estimation half in honest mode).
    estimation: Vec<Vec<usize>>,
    /// Per tree, the sorted structure half (honest mode only).
    structure: Vec<Vec<usize>>,
    membership: Vec<Vec<u64>>,
}

fn bitset(n: usize, members: &[usize]) -> Vec<u64> {
    let mut bits = vec![0u64; n.div_ceil(64)];
    for &j in members {
        bits[j / 64] |= 1 << (j % 64);
    }
    bits
}

impl Forest {
    /// A forest over fixed partitions and subsample sets, for experiments
    /// that hold the partitions fixed while changing the data.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        arm: u8,
        n: usize,
        trees: Vec<PartitionTree>,
        estimation: Vec<Vec<usize>>,
        honesty: Honesty,
        h: f64,
        min_leaf: usize,
    ) -> Result<Self> {
        if trees.is_empty() || trees.len() != estimation.len() {
            return Err(Error::InvalidConfig(format!(
                "{} trees but {} subsample sets",
                trees.len(),
                estimation.len()
            )));
        }
        let mut estimation = estimation;
        for set in &mut estimation {
            set.sort_unstable();
            set.dedup();
            if set.iter().any(|&j| j >= n) {
                return Err(Error::InvalidConfig("subsample index out of range".into()));
            }
        }
        let membership = estimation.iter().map(|s| bitset(n, s)).collect();
        let max_depth = 64 * trees[0].dim();
        let structure = vec![Vec::new(); trees.len()];
        Ok(Self {
            arm,
            honesty,
            h,
            n,
            min_leaf: min_leaf.max(1),
            max_depth,
            trees,
            estimation,
            structure,
            membership,
        })
    }

    pub fn arm(&self) -> u8 {
        self.arm
    }

    pub fn honesty(&self) -> Honesty {
        self.honesty
    }

    /// Bandwidth the diameter rule was built for.
    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn trees(&self) -> &[PartitionTree] {
        &self.trees
    }

    pub fn tree(&self, b: usize) -> &PartitionTree {
        &self.trees[b]
    }

    pub fn subsample(&self, b: usize) -> &[usize] {
        &self.estimation[b]
    }

    pub fn structure_sample(&self, b: usize) -> &[usize] {
        &self.structure[b]
    }

    pub fn min_leaf(&self) -> usize {
        self.min_leaf
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn n_units(&self) -> usize {
        self.n
    }

    #[inline]
    pub(crate) fn contains(&self, b: usize, j: usize) -> bool {
        self.membership[b][j / 64] >> (j % 64) & 1 == 1
    }

    /// Same partitions, relabelled as the other arm.
    pub fn with_arm(&self, arm: u8) -> Self {
        Self {
            arm,
            ..self.clone()
        }
    }

    /// Same partitions with subsample identities mapped through `perm`
    /// (new unit `perm[i]` is old unit `i`).
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let map = |sets: &[Vec<usize>]| -> Vec<Vec<usize>> {
            sets.iter()
                .map(|s| {
                    let mut v: Vec<usize> = s.iter().map(|&j| perm[j]).collect();
                    v.sort_unstable();
                    v
                })
                .collect()
        };
        let estimation = map(&self.estimation);
        let membership = estimation.iter().map(|s| bitset(self.n, s)).collect();
        Self {
            estimation,
            structure: map(&self.structure),
            membership,
            ..self.clone()
        }
    }

    /// JSON dump of tree `b` restricted to cells holding its subsample.
    pub fn dump_tree(&self, b: usize, data: &Dataset) -> Value {
        let mut labels: Vec<usize> = self.estimation[b].clone();
        labels.extend_from_slice(&self.structure[b]);
        labels.sort_unstable();
        let points: Vec<(usize, &[f64])> = labels.iter().map(|&j| (j, data.x(j))).collect();
        serde_json::json!({
            "arm": self.arm,
            "tree": b,
            "honesty": self.honesty,
            "diameter_bound": self.trees[b].diameter_bound(),
            "bounding_box": self.trees[b].bounding_box(),
            "estimation": self.estimation[b],
            "structure": self.structure[b],
            "root": self.trees[b].dump(&points),
        })
    }
}

/// Fewest halvings that bring the box under `bound`; a lower bound on the
/// depth any partition needs.
fn min_depth_needed(bbox: &BoundingBox, bound: f64) -> usize {
    let mut sides: Vec<f64> = bbox.lo.iter().zip(&bbox.hi).map(|(a, b)| b - a).collect();
    let target = bound * bound;
    let mut depth = 0;
    while sides.iter().map(|s| s * s).sum::<f64>() > target {
        let widest = sides
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(c, _)| c)
            .unwrap_or(0);
        sides[widest] *= 0.5;
        depth += 1;
        if depth > 1 << 20 {
            break;
        }
    }
    depth
}

/// Grows `config.trees_for(n)` trees on subsamples of arm `arm`.
///
/// Tree `b` uses the random stream `(config.seed, arm, b)` for its
/// subsample and split keys, so the forest is the same whether trees are
/// grown sequentially or in parallel.
pub fn build_forest(data: &Dataset, arm: u8, config: &ForestConfig, h: f64, m: usize) -> Result<Forest> {
    config.validate(m)?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::NonPositiveBandwidth(h));
    }
    let arm_units = data.arm_indices(arm);
    if arm_units.is_empty() {
        return Err(Error::EmptyArm(arm));
    }
    let s = config.subsample_for(arm_units.len());
    if s > arm_units.len() {
        return Err(Error::ArmTooSmall {
            arm,
            available: arm_units.len(),
            requested: s,
        });
    }
    if config.honesty == Honesty::Honest && s < 2 {
        return Err(Error::InvalidConfig("honest trees need a subsample of at least 2".into()));
    }
    let bbox = match &config.bounding_box {
        Some(b) if b.dim() != data.dim() => {
            return Err(Error::InvalidConfig(format!(
                "bounding box has dimension {}, data has {}",
                b.dim(),
                data.dim()
            )))
        }
        Some(b) => b.clone(),
        None => BoundingBox::enclosing(data, 0.01),
    };
    let bound = config.diameter_bound(h, m);
    let max_depth = config.max_depth_for(data.dim());
    if min_depth_needed(&bbox, bound) > max_depth {
        return Err(Error::DepthCapExceeded { bound, max_depth });
    }

    let n_trees = config.trees_for(data.n());
    let grown: Vec<(PartitionTree, Vec<usize>, Vec<usize>)> = (0..n_trees)
        .into_par_iter()
        .map(|b| {
            let labels = [u64::from(arm), b as u64];
            let mut draw = rng::stream(config.seed, &labels);
            let picked: Vec<usize> = sample(&mut draw, arm_units.len(), s)
                .into_iter()
                .map(|p| arm_units[p])
                .collect();
            let key = rng::derive(config.seed, &[u64::from(arm), b as u64, 0x7EE]);
            match config.honesty {
                Honesty::ExtremelyHonest => {
                    let mut est = picked;
                    est.sort_unstable();
                    Ok((PartitionTree::random(bbox.clone(), bound, key), est, Vec::new()))
                }
                Honesty::Honest => {
                    let (st, es) = picked.split_at(s / 2);
                    let (mut st, mut es) = (st.to_vec(), es.to_vec());
                    st.sort_unstable();
                    es.sort_unstable();
                    let tree = grow_honest(data, &bbox, bound, key, &st, &es, config.min_leaf, max_depth)?;
                    Ok((tree, es, st))
                }
            }
        })
        .collect::<Result<_>>()?;

    let mut trees = Vec::with_capacity(n_trees);
    let mut estimation = Vec::with_capacity(n_trees);
    let mut structure = Vec::with_capacity(n_trees);
    for (t, e, st) in grown {
        trees.push(t);
        estimation.push(e);
        structure.push(st);
    }
    let membership = estimation.iter().map(|s| bitset(data.n(), s)).collect();
    Ok(Forest {
        arm,
        honesty: config.honesty,
        h,
        n: data.n(),
        min_leaf: config.min_leaf,
        max_depth,
        trees,
        estimation,
        structure,
        membership,
    })
}

/// Median splits on the structure half while the cell is too wide and both
/// children keep `min_leaf` estimation points; random continuation below.
#[allow(clippy::too_many_arguments)]
fn grow_honest(
    data: &Dataset,
    bbox: &BoundingBox,
    bound: f64,
    key: u64,
    structure: &[usize],
    estimation: &[usize],
    min_leaf: usize,
    max_depth: usize,
) -> Result<PartitionTree> {
    let mut tree = PartitionTree::from_nodes(bbox.clone(), bound, Vec::new());
    let stop = bound * (1.0 - 1e-9);
    let stop_sumsq = stop * stop;
    let root = Cell::root(bbox);

    struct Job {
        id: usize,
        key: u64,
        depth: usize,
        lo: Vec<f64>,
        hi: Vec<f64>,
        structure: Vec<usize>,
        estimation: Vec<usize>,
    }
    tree.nodes.push(Node::Leaf);
    let mut stack = vec![Job {
        id: 0,
        key,
        depth: 0,
        lo: root.lo,
        hi: root.hi,
        structure: structure.to_vec(),
        estimation: estimation.to_vec(),
    }];
    while let Some(job) = stack.pop() {
        let sumsq: f64 = job.lo.iter().zip(&job.hi).map(|(a, b)| (b - a) * (b - a)).sum();
        if sumsq <= stop_sumsq {
            tree.nodes[job.id] = Node::Leaf;
            continue;
        }
        if job.depth >= max_depth {
            return Err(Error::DepthCapExceeded { bound, max_depth });
        }
        let split = median_split(data, &tree, &job.lo, &job.hi, job.key, &job.structure).and_then(
            |(coord, value)| {
                let side = |j: &usize| tree.goes_right(data.x(*j), coord, value);
                let (sr, sl): (Vec<usize>, Vec<usize>) = job.structure.iter().partition(|j| side(j));
                let (er, el): (Vec<usize>, Vec<usize>) = job.estimation.iter().partition(|j| side(j));
                let ok = !sl.is_empty() && !sr.is_empty() && el.len() >= min_leaf && er.len() >= min_leaf;
                ok.then_some((coord, value, sl, sr, el, er))
            },
        );
        match split {
            None => tree.nodes[job.id] = Node::Frontier { key: job.key },
            Some((coord, value, sl, sr, el, er)) => {
                let left = tree.nodes.len();
                let right = left + 1;
                tree.nodes.push(Node::Leaf);
                tree.nodes.push(Node::Leaf);
                tree.nodes[job.id] = Node::Split {
                    coord,
                    value,
                    left,
                    right,
                };
                let (mut rlo, mut lhi) = (job.lo.clone(), job.hi.clone());
                lhi[coord] = value;
                rlo[coord] = value;
                stack.push(Job {
                    id: right,
                    key: super::tree::child_key(job.key, true),
                    depth: job.depth + 1,
                    lo: rlo,
                    hi: job.hi,
                    structure: sr,
                    estimation: er,
                });
                stack.push(Job {
                    id: left,
                    key: super::tree::child_key(job.key, false),
                    depth: job.depth + 1,
                    lo: job.lo,
                    hi: lhi,
                    structure: sl,
                    estimation: el,
                });
            }
        }
    }
    Ok(tree)
}

/// Upper median of the structure points along a key-chosen coordinate.
fn median_split(
    data: &Dataset,
    tree: &PartitionTree,
    lo: &[f64],
    hi: &[f64],
    key: u64,
    structure: &[usize],
) -> Option<(usize, f64)> {
    if structure.len() < 2 {
        return None;
    }
    let coord = rng::below(rng::mix64(key ^ 0xC0), lo.len());
    let mut vals: Vec<f64> = structure
        .iter()
        .map(|&j| data.x(j)[coord].clamp(tree.bbox.lo[coord], tree.bbox.hi[coord]))
        .collect();
    let mid = vals.len() / 2;
    let (_, median, _) = vals.select_nth_unstable_by(mid, f64::total_cmp);
    let value = *median;
    (value > lo[coord] && value < hi[coord]).then_some((coord, value))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiameterReport {
    pub max_diameter: f64,
    pub bound: f64,
    /// Materialised leaves plus one lookup per sampled point.
    pub leaves_checked: usize,
    pub passed: bool,
}

/// Checks every materialised leaf and every leaf holding a subsample point
/// against `c_leaf * h^(1/2 + epsilon)`.
pub fn leaf_diameter_check(
    forest: &Forest,
    data: &Dataset,
    h: f64,
    config: &ForestConfig,
    m: usize,
) -> DiameterReport {
    let bound = config.diameter_bound(h, m);
    let per_tree: Vec<(f64, usize)> = (0..forest.n_trees())
        .into_par_iter()
        .map(|b| {
            let tree = forest.tree(b);
            let mut max: f64 = 0.0;
            let mut count = 0;
            for (_, lo, hi) in tree.materialised_leaves() {
                max = max.max(cell_diameter(&lo, &hi));
                count += 1;
            }
            for &j in forest.subsample(b).iter().chain(forest.structure_sample(b)) {
                max = max.max(tree.leaf_of(data.x(j)).diameter());
                count += 1;
            }
            (max, count)
        })
        .collect();
    let max_diameter = per_tree.iter().map(|p| p.0).fold(0.0, f64::max);
    DiameterReport {
        max_diameter,
        bound,
        leaves_checked: per_tree.iter().map(|p| p.1).sum(),
        passed: max_diameter <= bound,
    }
}
