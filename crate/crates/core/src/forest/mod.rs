//! Per-arm subsampled partition forests and their smoothing weights.
//!
//! Trees are axis-aligned partitions of a fixed bounding box. Extremely
//! honest trees draw every split from a hash of the node's path, so they
//! are never materialised: a lookup regenerates the splits along one
//! root-to-leaf path. Honest trees materialise their data-driven top (median
//! splits on the structure half of the subsample) and continue below it the
//! same way.

mod build;
mod config;
mod tree;
mod weights;

pub use build::{build_forest, leaf_diameter_check, DiameterReport, Forest};
pub use config::{ForestConfig, Honesty};
pub use tree::{BoundingBox, ExplicitNode, LeafRef, PartitionTree};
pub use weights::{forest_weight_rows, forest_weights, nearest_opposite, WeightRow};
