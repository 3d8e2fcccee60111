use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// `tau_hat +- z_{(1+level)/2} sqrt(Sigma_hat / (n h^(m/2)))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub center: f64,
    pub half_width: f64,
    pub level: f64,
    pub n: usize,
    pub h: f64,
    pub m: usize,
}

impl ConfidenceInterval {
    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower() <= value && value <= self.upper()
    }
}

pub fn confidence_interval(
    tau_hat: f64,
    sigma_hat: f64,
    n: usize,
    h: f64,
    m: usize,
    level: f64,
) -> Result<ConfidenceInterval> {
    if !(sigma_hat > 0.0 && sigma_hat.is_finite()) {
        return Err(Error::InvalidConfig(format!("variance must be positive and finite, got {sigma_hat}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!("level must lie in (0, 1), got {level}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::NonPositiveBandwidth(h));
    }
    let z = normal_quantile(0.5 * (1.0 + level));
    let scale = n as f64 * h.powf(m as f64 / 2.0);
    Ok(ConfidenceInterval {
        center: tau_hat,
        half_width: z * (sigma_hat / scale).sqrt(),
        level,
        n,
        h,
        m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-9);
        assert!((normal_quantile(0.995) - 2.575_829_303_548_901).abs() < 1e-9);
        assert!(normal_quantile(0.5).abs() < 1e-12);
    }

    #[test]
    fn half_width_arithmetic() {
        // h^(m/2) = 0.01 with m = 2, h = 0.01.
        let ci = confidence_interval(0.0, 4.0, 100, 0.01, 2, 0.95).unwrap();
        assert!((ci.half_width - 1.959_963_984_540_054 * 2.0).abs() < 1e-9);
        assert!((ci.half_width - 3.92).abs() < 1e-2);
    }

    #[test]
    fn quadrupling_n_halves_width() {
        let a = confidence_interval(1.0, 2.0, 1000, 0.05, 1, 0.9).unwrap();
        let b = confidence_interval(1.0, 2.0, 4000, 0.05, 1, 0.9).unwrap();
        assert!((a.half_width / b.half_width - 2.0).abs() < 1e-12);
    }

    #[test]
    fn higher_level_is_wider() {
        let a = confidence_interval(1.0, 2.0, 1000, 0.05, 1, 0.95).unwrap();
        let b = confidence_interval(1.0, 2.0, 1000, 0.05, 1, 0.99).unwrap();
        assert!(b.half_width > a.half_width);
        assert!(b.contains(1.0) && !b.contains(b.upper() + 1e-9));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(confidence_interval(0.0, 0.0, 10, 0.1, 1, 0.95).is_err());
        assert!(confidence_interval(0.0, 1.0, 10, 0.1, 1, 1.0).is_err());
    }
}
