//! Kernels, linear-smoother imputation and the kernel-smoothed CATE.

mod adjustment;
mod bandwidth;
mod cate;
mod impute;
mod kernel;
mod scheme;

pub use adjustment::{default_adjustment_bandwidth, fit_adjustment, AdjustmentModel, FittedAdjustment};
pub use bandwidth::{default_bandwidth, BandwidthRegime};
pub use cate::{cate_at, cate_batch, support_units};
pub use impute::{impute_potential_outcomes, impute_units, impute_with_rows, ImputedOutcomes, Provenance};
pub use kernel::{kernel_value, KernelProfile, KernelSpec};
pub use scheme::{knn_weights, ExplicitWeights, WeightScheme};
