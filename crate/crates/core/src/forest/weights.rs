use rayon::prelude::*;
use serde::Serialize;

use super::build::Forest;
use crate::data::dataset::sq_dist;
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Smoothing weights `j -> w_{i<-j}` of one unit over the opposite arm.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightRow {
    pub unit: usize,
    /// `(j, w_{i<-j})` with `w > 0`, ascending in `j`.
    pub entries: Vec<(usize, f64)>,
    /// Trees whose leaf at `X_i` held too few subsample points.
    pub dropped: Vec<usize>,
    /// Every tree dropped; the row is the nearest-neighbour fallback.
    pub fallback: bool,
    /// Mean leaf size over the trees that contributed.
    pub mean_leaf_size: f64,
}

impl WeightRow {
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn get(&self, j: usize) -> f64 {
        self.entries
            .binary_search_by_key(&j, |e| e.0)
            .map_or(0.0, |p| self.entries[p].1)
    }

    pub(crate) fn single(unit: usize, j: usize) -> Self {
        Self {
            unit,
            entries: vec![(j, 1.0)],
            dropped: Vec::new(),
            fallback: true,
            mean_leaf_size: 1.0,
        }
    }
}

/// Nearest unit of arm `arm` to `X_i` (ties to the smaller index).
pub fn nearest_opposite(data: &Dataset, i: usize, arm: u8) -> Option<usize> {
    let xi = data.x(i);
    (0..data.n())
        .filter(|&j| data.treatment(j) == arm)
        .map(|j| (sq_dist(xi, data.x(j)), j))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|p| p.1)
}

/// Forest weights of unit `i` over the arm `forest` was grown on:
///
/// `w_{i<-j} = (1/B') sum_b 1(j in I_b, X_j in L_b(X_i)) / |{k in I_b : X_k in L_b(X_i)}|`
///
/// where the sum runs over the `B'` trees whose leaf at `X_i` holds at least
/// `min_leaf` subsample points. When no tree qualifies, the row puts weight
/// one on the nearest opposite-arm unit.
pub fn forest_weights(forest: &Forest, data: &Dataset, i: usize) -> Result<WeightRow> {
    let arm = forest.arm();
    if data.treatment(i) == arm {
        return Err(Error::InvalidConfig(format!(
            "unit {i} is in arm {arm}; weights need the forest of the opposite arm"
        )));
    }
    if data.n() != forest.n_units() {
        return Err(Error::InvalidConfig("forest was built for a different dataset".into()));
    }
    let xi = data.x(i);
    // Leaf diameters are at most the bound, so co-leaf points lie within it.
    let radius = forest.trees()[0].diameter_bound() * (1.0 + 1e-9);
    let radius_sq = radius * radius;
    let candidates: Vec<usize> = (0..data.n())
        .filter(|&j| data.treatment(j) == arm && (radius.is_infinite() || sq_dist(xi, data.x(j)) <= radius_sq))
        .collect();
    if candidates.is_empty() && !data.treatments().contains(&arm) {
        return Err(Error::EmptyArm(arm));
    }

    let need = forest.min_leaf();
    let mut acc = vec![0.0; candidates.len()];
    let mut used = 0usize;
    let mut leaf_total = 0usize;
    let mut dropped = Vec::new();
    let mut members: Vec<usize> = Vec::with_capacity(candidates.len());
    for (b, tree) in forest.trees().iter().enumerate() {
        members.clear();
        members.extend((0..candidates.len()).filter(|&p| forest.contains(b, candidates[p])));
        if members.len() < need {
            dropped.push(b);
            continue;
        }
        let mut cell = tree.new_cell();
        let (_, _, depth) = tree.walk(xi, &mut cell, |coord, value, right| {
            members.retain(|&p| tree.goes_right(data.x(candidates[p]), coord, value) == right);
            members.len() >= need
        });
        if members.len() < need {
            dropped.push(b);
            continue;
        }
        if depth > forest.max_depth() {
            return Err(Error::DepthCapExceeded {
                bound: tree.diameter_bound(),
                max_depth: forest.max_depth(),
            });
        }
        let share = 1.0 / members.len() as f64;
        for &p in &members {
            acc[p] += share;
        }
        used += 1;
        leaf_total += members.len();
    }

    if used == 0 {
        let j = nearest_opposite(data, i, arm).ok_or(Error::EmptyArm(arm))?;
        let mut row = WeightRow::single(i, j);
        row.dropped = dropped;
        return Ok(row);
    }
    let entries = candidates
        .iter()
        .zip(&acc)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&j, &w)| (j, w / used as f64))
        .collect();
    Ok(WeightRow {
        unit: i,
        entries,
        dropped,
        fallback: false,
        mean_leaf_size: leaf_total as f64 / used as f64,
    })
}

/// Weight rows for `units`, each against the forest of its opposite arm.
/// Rows are computed in parallel and returned in the order of `units`.
pub fn forest_weight_rows(
    treated: &Forest,
    control: &Forest,
    data: &Dataset,
    units: &[usize],
) -> Result<Vec<WeightRow>> {
    units
        .par_iter()
        .map(|&i| {
            let forest = if data.treatment(i) == 1 { control } else { treated };
            forest_weights(forest, data, i)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{BoundingBox, ExplicitNode, Honesty, PartitionTree};

    /// Units 0 (treated, x=0.1), 1 (control, x=0.2), 2 (control, x=0.8).
    fn three_units() -> Dataset {
        Dataset::new(1, vec![0.1, 0.2, 0.8], vec![1, 0, 0], vec![5.0, 1.0, 3.0]).unwrap()
    }

    fn control_forest(trees: Vec<ExplicitNode>, data: &Dataset) -> Forest {
        let parts = trees
            .iter()
            .map(|t| PartitionTree::explicit(BoundingBox::unit(1), t))
            .collect::<Vec<_>>();
        let sets = vec![vec![1, 2]; parts.len()];
        Forest::from_parts(0, data.n(), parts, sets, Honesty::ExtremelyHonest, 1.0, 1).unwrap()
    }

    #[test]
    fn single_leaf_gives_uniform_weights() {
        let data = three_units();
        let f = control_forest(vec![ExplicitNode::Leaf], &data);
        let row = forest_weights(&f, &data, 0).unwrap();
        assert_eq!(row.entries, vec![(1, 0.5), (2, 0.5)]);
    }

    #[test]
    fn leaf_with_one_point_gets_full_weight() {
        let data = three_units();
        let split = ExplicitNode::split(0, 0.5, ExplicitNode::Leaf, ExplicitNode::Leaf);
        let f = control_forest(vec![split], &data);
        let row = forest_weights(&f, &data, 0).unwrap();
        assert_eq!(row.get(1), 1.0);
        assert_eq!(row.get(2), 0.0);
    }

    #[test]
    fn two_trees_average_their_leaf_shares() {
        let data = three_units();
        let split = ExplicitNode::split(0, 0.5, ExplicitNode::Leaf, ExplicitNode::Leaf);
        let f = control_forest(vec![ExplicitNode::Leaf, split], &data);
        let row = forest_weights(&f, &data, 0).unwrap();
        assert_eq!(row.get(1), 0.75);
        assert_eq!(row.get(2), 0.25);
        assert_eq!(row.total(), 1.0);
    }

    #[test]
    fn empty_leaves_drop_trees_and_fall_back_to_nearest() {
        let data = three_units();
        // Both control points sit right of 0.15; unit 0 is alone on the left.
        let split = ExplicitNode::split(0, 0.15, ExplicitNode::Leaf, ExplicitNode::Leaf);
        let f = control_forest(vec![split.clone(), ExplicitNode::Leaf], &data);
        let row = forest_weights(&f, &data, 0).unwrap();
        assert_eq!(row.dropped, vec![0]);
        assert_eq!(row.entries, vec![(1, 0.5), (2, 0.5)]);

        let f = control_forest(vec![split], &data);
        let row = forest_weights(&f, &data, 0).unwrap();
        assert!(row.fallback);
        assert_eq!(row.entries, vec![(1, 1.0)]);
    }

    #[test]
    fn same_arm_forest_is_rejected() {
        let data = three_units();
        let f = control_forest(vec![ExplicitNode::Leaf], &data);
        assert!(forest_weights(&f, &data, 1).is_err());
    }
}
