//! Plug-in asymptotic variance and CLT confidence intervals.

mod constants;
mod interval;
mod nuisance;

pub use constants::{kernel_constants, KernelConstants};
pub use interval::{confidence_interval, normal_quantile, ConfidenceInterval};
pub use nuisance::{
    estimate_density_factor, estimate_nuisance, estimate_propensity, estimate_residual_variance, sigma_from_density,
    sigma_hat, NuisanceEstimates, NuisanceOptions, ResidualVariance,
};
