use serde::{Deserialize, Serialize};

use super::constants::KernelConstants;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::smoother::{AdjustmentModel, KernelSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NuisanceOptions {
    /// `e_hat` is clipped to `[clip, 1 - clip]`.
    pub clip: f64,
    pub var_floor: f64,
}

impl Default for NuisanceOptions {
    fn default() -> Self {
        Self {
            clip: 0.02,
            var_floor: 1e-8,
        }
    }
}

/// Plug-in ingredients of `Sigma(x)` at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NuisanceEstimates {
    /// Estimate of `c_K f(x)`.
    pub a_hat: f64,
    pub e_hat: f64,
    pub s0_sq: f64,
    pub s1_sq: f64,
    /// Some residual variance hit the floor.
    pub floored: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidualVariance {
    pub value: f64,
    pub floored: bool,
}

fn check_h(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveBandwidth(h))
    }
}

/// `A_hat = h^((d-m)/2) (1/n) sum_i K_h(X_i - x) = h^(-m/2) (1/n) sum_i K(||X_i - x|| / sqrt(h))`.
pub fn estimate_density_factor(data: &Dataset, spec: &KernelSpec, h: f64, m: usize, x: &[f64]) -> Result<f64> {
    check_h(h)?;
    let sum: f64 = (0..data.n()).map(|i| spec.weight(h, data.x(i), x)).sum();
    if sum <= 0.0 {
        return Err(Error::EmptyNeighborhood);
    }
    Ok(h.powf(-(m as f64) / 2.0) * sum / data.n() as f64)
}

/// Kernel-weighted share of treated units near `x`, clipped.
pub fn estimate_propensity(data: &Dataset, spec: &KernelSpec, h_e: f64, x: &[f64], clip: f64) -> Result<f64> {
    check_h(h_e)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..data.n() {
        let k = spec.weight(h_e, data.x(i), x);
        num += k * f64::from(data.treatment(i));
        den += k;
    }
    if den <= 0.0 {
        return Err(Error::EmptyNeighborhood);
    }
    Ok((num / den).clamp(clip, 1.0 - clip))
}

/// Kernel-weighted mean of `(Y_i - mu_hat_arm(X_i))^2` over arm units near
/// `x`, floored at `var_floor`.
pub fn estimate_residual_variance(
    data: &Dataset,
    adjustment: &AdjustmentModel,
    spec: &KernelSpec,
    h_s: f64,
    x: &[f64],
    arm: u8,
    var_floor: f64,
) -> Result<ResidualVariance> {
    check_h(h_s)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in (0..data.n()).filter(|&i| data.treatment(i) == arm) {
        let k = spec.weight(h_s, data.x(i), x);
        if k > 0.0 {
            let r = data.y(i) - adjustment.mu(arm, data.x(i));
            num += k * r * r;
            den += k;
        }
    }
    if den <= 0.0 {
        return Err(Error::EmptyNeighborhood);
    }
    let raw = num / den;
    Ok(ResidualVariance {
        value: raw.max(var_floor),
        floored: raw < var_floor,
    })
}

/// All nuisances at `x` with one shared bandwidth `h`.
pub fn estimate_nuisance(
    data: &Dataset,
    adjustment: &AdjustmentModel,
    spec: &KernelSpec,
    h: f64,
    m: usize,
    x: &[f64],
    options: &NuisanceOptions,
) -> Result<NuisanceEstimates> {
    let a_hat = estimate_density_factor(data, spec, h, m, x)?;
    let e_hat = estimate_propensity(data, spec, h, x, options.clip)?;
    let s0 = estimate_residual_variance(data, adjustment, spec, h, x, 0, options.var_floor)?;
    let s1 = estimate_residual_variance(data, adjustment, spec, h, x, 1, options.var_floor)?;
    Ok(NuisanceEstimates {
        a_hat,
        e_hat,
        s0_sq: s0.value,
        s1_sq: s1.value,
        floored: s0.floored || s1.floored,
    })
}

/// `Sigma_hat = (K2 / c_K) (s1^2 / e_hat + s0^2 / (1 - e_hat)) / A_hat`.
pub fn sigma_hat(nuisance: &NuisanceEstimates, constants: &KernelConstants) -> f64 {
    let ratio = nuisance.s1_sq / nuisance.e_hat + nuisance.s0_sq / (1.0 - nuisance.e_hat);
    constants.k2 / constants.c_k * ratio / nuisance.a_hat
}

/// `Sigma(x) = (s1^2 / e + s0^2 / (1 - e)) K2 / (c_K^2 f)` for a known density `f`.
pub fn sigma_from_density(constants: &KernelConstants, f: f64, e: f64, s1_sq: f64, s0_sq: f64) -> f64 {
    (s1_sq / e + s0_sq / (1.0 - e)) * constants.k2 / (constants.c_k * constants.c_k * f)
}
