use std::sync::Arc;

use super::kernel::KernelSpec;
use crate::data::{Dataset, GeneratedTruth};
use crate::error::{Error, Result};

/// Regression adjustment `mu_hat_w` added to imputed outcomes.
#[derive(Clone, Debug, Default)]
pub enum AdjustmentModel {
    /// `mu_hat = 0`.
    #[default]
    Zero,
    /// The true surfaces of a synthetic model.
    Oracle(Arc<GeneratedTruth>),
    /// Per-arm Nadaraya-Watson regression.
    Fitted(FittedAdjustment),
}

impl AdjustmentModel {
    #[inline]
    pub fn mu(&self, arm: u8, x: &[f64]) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Oracle(truth) => truth.mu(arm, x),
            Self::Fitted(fit) => fit.predict(arm, x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    pub fn oracle(truth: &GeneratedTruth) -> Self {
        Self::Oracle(Arc::new(truth.clone()))
    }
}

#[derive(Clone, Debug)]
struct ArmFit {
    x: Vec<f64>,
    y: Vec<f64>,
    mean: f64,
}

/// Kernel regression of `Y` on `X` within each arm, evaluated lazily.
#[derive(Clone, Debug)]
pub struct FittedAdjustment {
    kernel: KernelSpec,
    h: f64,
    dim: usize,
    arms: [ArmFit; 2],
}

impl FittedAdjustment {
    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    /// Kernel-weighted mean of arm `arm`'s outcomes around `x`; the arm
    /// mean when no arm point is within reach.
    pub fn predict(&self, arm: u8, x: &[f64]) -> f64 {
        let fit = &self.arms[usize::from(arm.min(1))];
        let mut num = 0.0;
        let mut den = 0.0;
        for (xj, &yj) in fit.x.chunks(self.dim).zip(&fit.y) {
            let k = self.kernel.weight(self.h, xj, x);
            if k > 0.0 {
                num += k * yj;
                den += k;
            }
        }
        if den > 0.0 {
            num / den
        } else {
            fit.mean
        }
    }
}

/// `n^(-1/(m+2))`, wider than the estimation bandwidth.
pub fn default_adjustment_bandwidth(n: usize, m: usize) -> f64 {
    (n as f64).powf(-1.0 / (m as f64 + 2.0))
}

pub fn fit_adjustment(data: &Dataset, kernel: &KernelSpec, h_mu: f64) -> Result<AdjustmentModel> {
    if !(h_mu > 0.0 && h_mu.is_finite()) {
        return Err(Error::NonPositiveBandwidth(h_mu));
    }
    let fit_arm = |arm: u8| -> Result<ArmFit> {
        let units = data.arm_indices(arm);
        if units.is_empty() {
            return Err(Error::EmptyArm(arm));
        }
        let y: Vec<f64> = units.iter().map(|&i| data.y(i)).collect();
        Ok(ArmFit {
            x: units.iter().flat_map(|&i| data.x(i).iter().copied()).collect(),
            mean: y.iter().sum::<f64>() / y.len() as f64,
            y,
        })
    };
    Ok(AdjustmentModel::Fitted(FittedAdjustment {
        kernel: *kernel,
        h: h_mu,
        dim: data.dim(),
        arms: [fit_arm(0)?, fit_arm(1)?],
    }))
}
