use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::data::Dataset;
use crate::rng::{below, mix64, unit_f64};

const SPLIT_SALT: u64 = 0x5851_F42D_4C95_7F2D;
const LEFT_SALT: u64 = 0x1405_7B7E_F767_814F;
const RIGHT_SALT: u64 = 0x2545_F491_4F6C_DD1D;
/// Lookups never walk further than this, whatever the bound.
const HARD_STEP_LIMIT: usize = 1 << 16;

/// Axis-aligned box `[lo, hi]` in which partitions live.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    /// Coordinate-wise data range, widened by `expand * range` on both sides.
    pub fn enclosing(data: &Dataset, expand: f64) -> Self {
        let d = data.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for i in 0..data.n() {
            for (c, &v) in data.x(i).iter().enumerate() {
                lo[c] = lo[c].min(v);
                hi[c] = hi[c].max(v);
            }
        }
        for c in 0..d {
            let pad = expand * (hi[c] - lo[c]);
            lo[c] -= pad;
            hi[c] += pad;
        }
        Self { lo, hi }
    }

    pub fn unit(d: usize) -> Self {
        Self {
            lo: vec![0.0; d],
            hi: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn diameter(&self) -> f64 {
        cell_diameter(&self.lo, &self.hi)
    }
}

pub(crate) fn cell_diameter(lo: &[f64], hi: &[f64]) -> f64 {
    lo.iter().zip(hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
}

/// A hand-specified partition, used for fixed-partition experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ExplicitNode {
    Leaf,
    Split {
        coord: usize,
        value: f64,
        left: Box<ExplicitNode>,
        right: Box<ExplicitNode>,
    },
}

impl ExplicitNode {
    pub fn split(coord: usize, value: f64, left: ExplicitNode, right: ExplicitNode) -> Self {
        Self::Split {
            coord,
            value,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Node {
    Split {
        coord: usize,
        value: f64,
        left: usize,
        right: usize,
    },
    Leaf,
    /// Data-independent random continuation, keyed by `key`.
    Frontier {
        key: u64,
    },
}

/// The leaf cell containing a point: a materialised node plus, below a
/// frontier, the key and depth of the implicit cell.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafRef {
    pub node: usize,
    pub key: u64,
    pub depth: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl LeafRef {
    pub fn diameter(&self) -> f64 {
        cell_diameter(&self.lo, &self.hi)
    }

    /// Same cell, ignoring the recorded bounds.
    pub fn same_cell(&self, other: &LeafRef) -> bool {
        self.node == other.node && self.key == other.key && self.depth == other.depth
    }
}

/// Mutable cell state during a walk.
#[derive(Clone, Debug)]
pub(crate) struct Cell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub sumsq: f64,
}

impl Cell {
    pub fn root(bbox: &BoundingBox) -> Self {
        let mut c = Self {
            lo: bbox.lo.clone(),
            hi: bbox.hi.clone(),
            sumsq: 0.0,
        };
        c.sumsq = c.exact_sumsq();
        c
    }

    fn reset(&mut self, bbox: &BoundingBox, root_sumsq: f64) {
        self.lo.copy_from_slice(&bbox.lo);
        self.hi.copy_from_slice(&bbox.hi);
        self.sumsq = root_sumsq;
    }

    fn exact_sumsq(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a) * (b - a)).sum()
    }

    #[inline]
    fn cut(&mut self, coord: usize, value: f64, right: bool) {
        let old = self.hi[coord] - self.lo[coord];
        if right {
            self.lo[coord] = value;
        } else {
            self.hi[coord] = value;
        }
        let new = self.hi[coord] - self.lo[coord];
        self.sumsq += new * new - old * old;
    }
}

/// One random split of an implicit cell: `(coord, value)`.
#[inline]
pub(crate) fn implicit_split(key: u64, lo: &[f64], hi: &[f64]) -> (usize, f64) {
    let r = mix64(key);
    let coord = below(r, lo.len());
    let u = unit_f64(mix64(r ^ SPLIT_SALT));
    (coord, lo[coord] + u * (hi[coord] - lo[coord]))
}

#[inline]
pub(crate) fn child_key(key: u64, right: bool) -> u64 {
    mix64(key ^ if right { RIGHT_SALT } else { LEFT_SALT })
}

/// An axis-aligned binary partition of a bounding box.
///
/// Membership is half-open: a point goes right at a split iff its
/// (box-clamped) coordinate is `>= value`, so every point of space has
/// exactly one leaf. Below a frontier node, cells are split at random until
/// their diameter is at most `bound`.
#[derive(Clone, Debug)]
pub struct PartitionTree {
    pub(crate) bbox: BoundingBox,
    pub(crate) bound: f64,
    stop_sumsq: f64,
    root_sumsq: f64,
    pub(crate) nodes: Vec<Node>,
}

impl PartitionTree {
    pub(crate) fn from_nodes(bbox: BoundingBox, bound: f64, nodes: Vec<Node>) -> Self {
        // The running squared diameter is updated incrementally, so stop a
        // hair below the bound to keep the exact diameter under it.
        let stop = bound * (1.0 - 1e-9);
        let root_sumsq = Cell::root(&bbox).sumsq;
        Self {
            bbox,
            bound,
            stop_sumsq: stop * stop,
            root_sumsq,
            nodes,
        }
    }

    /// A data-independent random partition keyed by `key`.
    pub fn random(bbox: BoundingBox, bound: f64, key: u64) -> Self {
        Self::from_nodes(bbox, bound, vec![Node::Frontier { key }])
    }

    /// A fixed partition with exactly the given splits.
    pub fn explicit(bbox: BoundingBox, root: &ExplicitNode) -> Self {
        fn push(nodes: &mut Vec<Node>, n: &ExplicitNode) -> usize {
            let id = nodes.len();
            match n {
                ExplicitNode::Leaf => nodes.push(Node::Leaf),
                ExplicitNode::Split {
                    coord,
                    value,
                    left,
                    right,
                } => {
                    nodes.push(Node::Leaf);
                    let l = push(nodes, left);
                    let r = push(nodes, right);
                    nodes[id] = Node::Split {
                        coord: *coord,
                        value: *value,
                        left: l,
                        right: r,
                    };
                }
            }
            id
        }
        let mut nodes = Vec::new();
        push(&mut nodes, root);
        Self::from_nodes(bbox, f64::INFINITY, nodes)
    }

    pub fn bounding_box(&self) -> &BoundingBox {
        &self.bbox
    }

    /// Diameter bound enforced below frontier nodes.
    pub fn diameter_bound(&self) -> f64 {
        self.bound
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    #[inline]
    pub(crate) fn goes_right(&self, x: &[f64], coord: usize, value: f64) -> bool {
        let v = x[coord].clamp(self.bbox.lo[coord], self.bbox.hi[coord]);
        v >= value
    }

    pub(crate) fn new_cell(&self) -> Cell {
        Cell::root(&self.bbox)
    }

    /// Walks `x` to its leaf, calling `on_split(coord, value, right)` at
    /// every split on the way. `on_split` may return `false` to stop early;
    /// the returned leaf is then the cell reached so far.
    pub(crate) fn walk<F>(&self, x: &[f64], cell: &mut Cell, mut on_split: F) -> (usize, u64, usize)
    where
        F: FnMut(usize, f64, bool) -> bool,
    {
        cell.reset(&self.bbox, self.root_sumsq);
        let mut node = 0;
        let mut depth = 0;
        loop {
            match self.nodes[node] {
                Node::Leaf => return (node, 0, depth),
                Node::Split {
                    coord,
                    value,
                    left,
                    right,
                } => {
                    let r = self.goes_right(x, coord, value);
                    cell.cut(coord, value, r);
                    depth += 1;
                    if !on_split(coord, value, r) {
                        return (node, 0, depth);
                    }
                    node = if r { right } else { left };
                }
                Node::Frontier { key } => {
                    let mut key = key;
                    let mut steps = 0;
                    while cell.sumsq > self.stop_sumsq && steps < HARD_STEP_LIMIT {
                        let (coord, value) = implicit_split(key, &cell.lo, &cell.hi);
                        let r = self.goes_right(x, coord, value);
                        cell.cut(coord, value, r);
                        key = child_key(key, r);
                        depth += 1;
                        steps += 1;
                        if !on_split(coord, value, r) {
                            break;
                        }
                    }
                    return (node, key, depth);
                }
            }
        }
    }

    /// The leaf containing `x`; points outside the box are clamped onto it.
    pub fn leaf_of(&self, x: &[f64]) -> LeafRef {
        let mut cell = self.new_cell();
        let (node, key, depth) = self.walk(x, &mut cell, |_, _, _| true);
        LeafRef {
            node,
            key,
            depth,
            lo: cell.lo,
            hi: cell.hi,
        }
    }

    /// Indices among `candidates` sharing `x`'s leaf.
    pub fn co_leaf(&self, data: &Dataset, x: &[f64], candidates: &[usize]) -> Vec<usize> {
        let mut members = candidates.to_vec();
        let mut cell = self.new_cell();
        self.walk(x, &mut cell, |coord, value, right| {
            members.retain(|&j| self.goes_right(data.x(j), coord, value) == right);
            true
        });
        members
    }

    /// Materialised nodes that are terminal leaves, with their cells.
    pub(crate) fn materialised_leaves(&self) -> Vec<(usize, Vec<f64>, Vec<f64>)> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, self.bbox.lo.clone(), self.bbox.hi.clone())];
        while let Some((node, lo, hi)) = stack.pop() {
            match self.nodes[node] {
                Node::Leaf => out.push((node, lo, hi)),
                Node::Frontier { .. } => {}
                Node::Split {
                    coord,
                    value,
                    left,
                    right,
                } => {
                    let (llo, mut lhi) = (lo.clone(), hi.clone());
                    lhi[coord] = value;
                    let (mut rlo, rhi) = (lo, hi);
                    rlo[coord] = value;
                    stack.push((right, rlo, rhi));
                    stack.push((left, llo, lhi));
                }
            }
        }
        out
    }

    /// JSON dump of the partition restricted to the cells that contain at
    /// least one of `points` (given as `(label, coordinates)`).
    pub fn dump(&self, points: &[(usize, &[f64])]) -> Value {
        let all: Vec<usize> = (0..points.len()).collect();
        self.dump_node(0, None, Cell::root(&self.bbox), points, &all)
    }

    fn dump_node(
        &self,
        node: usize,
        implicit: Option<u64>,
        cell: Cell,
        points: &[(usize, &[f64])],
        here: &[usize],
    ) -> Value {
        let leaf = |cell: &Cell| {
            json!({
                "leaf": true,
                "lo": cell.lo,
                "hi": cell.hi,
                "points": here.iter().map(|&p| points[p].0).collect::<Vec<_>>(),
            })
        };
        let (coord, value, next): (usize, f64, [(usize, Option<u64>); 2]) = match implicit {
            Some(key) => {
                if cell.sumsq <= self.stop_sumsq || here.is_empty() {
                    return leaf(&cell);
                }
                let (c, v) = implicit_split(key, &cell.lo, &cell.hi);
                (c, v, [(node, Some(child_key(key, false))), (node, Some(child_key(key, true)))])
            }
            None => match self.nodes[node] {
                Node::Leaf => return leaf(&cell),
                Node::Frontier { key } => return self.dump_node(node, Some(key), cell, points, here),
                Node::Split {
                    coord,
                    value,
                    left,
                    right,
                } => (coord, value, [(left, None), (right, None)]),
            },
        };
        let (r, l): (Vec<usize>, Vec<usize>) = here
            .iter()
            .partition(|&&p| self.goes_right(points[p].1, coord, value));
        let mut lcell = cell.clone();
        lcell.cut(coord, value, false);
        let mut rcell = cell;
        rcell.cut(coord, value, true);
        json!({
            "coord": coord,
            "value": value,
            "left": self.dump_node(next[0].0, next[0].1, lcell, points, &l),
            "right": self.dump_node(next[1].0, next[1].1, rcell, points, &r),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d_split() -> PartitionTree {
        PartitionTree::explicit(
            BoundingBox::unit(1),
            &ExplicitNode::split(0, 0.5, ExplicitNode::Leaf, ExplicitNode::Leaf),
        )
    }

    #[test]
    fn single_leaf_tree_returns_root() {
        let t = PartitionTree::explicit(BoundingBox::unit(2), &ExplicitNode::Leaf);
        for x in [[0.1, 0.9], [0.5, 0.5], [7.0, -3.0]] {
            assert_eq!(t.leaf_of(&x).node, 0);
        }
    }

    #[test]
    fn split_point_goes_right() {
        let t = one_d_split();
        assert_eq!(t.leaf_of(&[0.5]).node, 2);
        assert_eq!(t.leaf_of(&[0.4999999]).node, 1);
    }

    #[test]
    fn outside_points_clamp_to_boundary_cells() {
        let t = one_d_split();
        assert_eq!(t.leaf_of(&[-5.0]).node, 1);
        assert_eq!(t.leaf_of(&[5.0]).node, 2);
    }

    #[test]
    fn random_tree_leaves_meet_bound() {
        let bbox = BoundingBox {
            lo: vec![-1.0, -2.0, 0.0],
            hi: vec![1.0, 2.0, 0.5],
        };
        let t = PartitionTree::random(bbox, 0.05, 99);
        for k in 0..200u64 {
            let x: Vec<f64> = (0..3).map(|c| unit_f64(mix64(k * 3 + c)) * 4.0 - 2.0).collect();
            let leaf = t.leaf_of(&x);
            assert!(leaf.diameter() <= 0.05, "{}", leaf.diameter());
            for c in 0..3 {
                let v = x[c].clamp(t.bbox.lo[c], t.bbox.hi[c]);
                assert!(leaf.lo[c] <= v && (v < leaf.hi[c] || leaf.hi[c] == t.bbox.hi[c]));
            }
        }
    }

    #[test]
    fn random_tree_is_reproducible_and_key_dependent() {
        let bbox = BoundingBox::unit(2);
        let a = PartitionTree::random(bbox.clone(), 0.1, 5);
        let b = PartitionTree::random(bbox.clone(), 0.1, 5);
        let c = PartitionTree::random(bbox, 0.1, 6);
        let x = [0.3, 0.7];
        assert_eq!(a.leaf_of(&x), b.leaf_of(&x));
        assert_ne!(a.leaf_of(&x).lo, c.leaf_of(&x).lo);
    }

    #[test]
    fn bound_above_box_diameter_gives_single_leaf() {
        let bbox = BoundingBox::unit(3);
        let t = PartitionTree::random(bbox.clone(), bbox.diameter() * 1.01, 1);
        let leaf = t.leaf_of(&[0.2, 0.2, 0.2]);
        assert_eq!(leaf.depth, 0);
        assert_eq!(leaf.lo, bbox.lo);
    }

    #[test]
    fn dump_lists_points_in_leaves() {
        let t = one_d_split();
        let a = [0.2];
        let b = [0.7];
        let v = t.dump(&[(4, &a), (9, &b)]);
        assert_eq!(v["value"], 0.5);
        assert_eq!(v["left"]["points"], json!([4]));
        assert_eq!(v["right"]["points"], json!([9]));
    }
}
