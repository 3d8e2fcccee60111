use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRegime {
    /// `h = c_h n^(-2/(m+2))`, balancing bias and variance.
    #[default]
    Mse,
    /// `h = c_h n^(-2/(m+1))`, undersmoothed so that `n h^(m/2+1) -> 0`
    /// while `n h^(m/2) -> inf`.
    Clt,
}

impl BandwidthRegime {
    pub fn exponent(self, m: usize) -> f64 {
        let m = m as f64;
        match self {
            Self::Mse => 2.0 / (m + 2.0),
            Self::Clt => 2.0 / (m + 1.0),
        }
    }
}

pub fn default_bandwidth(n: usize, m: usize, regime: BandwidthRegime, c_h: f64) -> f64 {
    c_h * (n as f64).powf(-regime.exponent(m))
}
