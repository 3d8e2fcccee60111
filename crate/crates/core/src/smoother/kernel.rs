use serde::{Deserialize, Serialize};

use crate::data::dataset::sq_dist;
use crate::error::{Error, Result};

/// Cutoff of the truncated Gaussian profile.
pub const GAUSSIAN_CUTOFF: f64 = 3.0;

/// Radial profile `K: [0, inf) -> [0, inf)` with bounded support.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelProfile {
    /// `K(u) = 1` on `[0, 1]`.
    #[default]
    Box,
    /// `K(u) = exp(-u^2 / 2)` on `[0, 3]`.
    TruncatedGaussian,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KernelSpec {
    pub profile: KernelProfile,
}

impl KernelSpec {
    pub const BOX: Self = Self {
        profile: KernelProfile::Box,
    };
    pub const TRUNCATED_GAUSSIAN: Self = Self {
        profile: KernelProfile::TruncatedGaussian,
    };

    pub fn support_radius(&self) -> f64 {
        match self.profile {
            KernelProfile::Box => 1.0,
            KernelProfile::TruncatedGaussian => GAUSSIAN_CUTOFF,
        }
    }

    /// `K(u)`.
    #[inline]
    pub fn profile_value(&self, u: f64) -> f64 {
        if u > self.support_radius() {
            return 0.0;
        }
        match self.profile {
            KernelProfile::Box => 1.0,
            KernelProfile::TruncatedGaussian => (-0.5 * u * u).exp(),
        }
    }

    /// `K(||xi - x|| / sqrt(h))`, the kernel without its `h^(-d/2)` factor.
    #[inline]
    pub fn weight(&self, h: f64, xi: &[f64], x: &[f64]) -> f64 {
        let dist_sq = sq_dist(xi, x);
        let reach = self.support_radius() * self.support_radius() * h;
        if dist_sq > reach {
            return 0.0;
        }
        match self.profile {
            KernelProfile::Box => 1.0,
            KernelProfile::TruncatedGaussian => (-0.5 * dist_sq / h).exp(),
        }
    }

    /// Ambient distance beyond which the kernel vanishes.
    pub fn reach(&self, h: f64) -> f64 {
        self.support_radius() * h.sqrt()
    }
}

/// `K_h(xi - x) = h^(-d/2) K(||xi - x|| / sqrt(h))`.
pub fn kernel_value(spec: &KernelSpec, h: f64, xi: &[f64], x: &[f64]) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::NonPositiveBandwidth(h));
    }
    let d = xi.len() as f64;
    let u = sq_dist(xi, x).sqrt() / h.sqrt();
    Ok(h.powf(-d / 2.0) * spec.profile_value(u))
}
