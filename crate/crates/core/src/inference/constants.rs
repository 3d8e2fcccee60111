use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::smoother::{KernelProfile, KernelSpec};

/// `c_K = int K(||t||) dt` and `int K^2(||t||) dt` over `R^m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelConstants {
    pub c_k: f64,
    pub k2: f64,
}

fn unit_ball_volume(m: usize) -> f64 {
    let half = m as f64 / 2.0;
    (half * PI.ln() - ln_gamma(half + 1.0)).exp()
}

pub fn kernel_constants(spec: &KernelSpec, m: usize) -> KernelConstants {
    let half = m as f64 / 2.0;
    match spec.profile {
        KernelProfile::Box => {
            let v = unit_ball_volume(m);
            KernelConstants { c_k: v, k2: v }
        }
        KernelProfile::TruncatedGaussian => {
            // Radial integrals of exp(-r^2/2) and exp(-r^2) up to the cutoff
            // reduce to regularised lower incomplete gamma functions.
            let r2 = spec.support_radius().powi(2);
            KernelConstants {
                c_k: (2.0 * PI).powf(half) * gamma_lr(half, r2 / 2.0),
                k2: PI.powf(half) * gamma_lr(half, r2),
            }
        }
    }
}
