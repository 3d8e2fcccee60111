//! Kernel-smoothed causal forests for conditional average treatment effect
//! (CATE) estimation when covariates live on a low-dimensional manifold.
//!
//! The crate is organised around the estimation pipeline:
//!
//! * [`data`]: datasets, CSV I/O and exact-manifold synthetic generators with
//!   closed-form ground truth.
//! * [`forest`]: per-arm subsampled partition trees (honest and extremely
//!   honest) and the forest smoothing weights `w_{i<-j}`.
//! * [`smoother`]: kernels, linear-smoother imputation of the missing
//!   potential outcome, regression adjustment and the kernel-smoothed CATE.
//! * [`inference`]: plug-in asymptotic variance and confidence intervals.
//! * [`experiments`]: the Monte-Carlo harness (rate sweeps, coverage, double
//!   robustness, ambient-dimension invariance, scheme equivalence).
//! * [`cli`]: the command-line front end used by the `manifold-cate` binary.

pub mod cli;
pub mod data;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod forest;
pub mod inference;
pub mod rng;
pub mod smoother;

pub use data::{Dataset, GeneratedTruth, ManifoldKind, ManifoldSpec, OutcomeModel};
pub use error::{Error, Result};
pub use estimator::{CateEstimator, EstimatorConfig};
pub use forest::{Forest, ForestConfig, Honesty};
pub use smoother::{AdjustmentModel, KernelProfile, KernelSpec, WeightScheme};
