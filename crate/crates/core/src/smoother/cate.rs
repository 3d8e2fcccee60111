use super::impute::ImputedOutcomes;
use super::kernel::KernelSpec;
use crate::data::Dataset;
use crate::error::{Error, Result};

/// `tau_hat(x) = sum_i K_h(X_i - x) (Y_hat_i(1) - Y_hat_i(0)) / sum_i K_h(X_i - x)`.
pub fn cate_at(data: &Dataset, imputed: &ImputedOutcomes, kernel: &KernelSpec, h: f64, x: &[f64]) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::NonPositiveBandwidth(h));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..data.n() {
        let k = kernel.weight(h, data.x(i), x);
        if k > 0.0 {
            let c = imputed.contrast(i).ok_or(Error::MissingImputation(i))?;
            num += k * c;
            den += k;
        }
    }
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(Error::EmptyNeighborhood)
    }
}

pub fn cate_batch(
    data: &Dataset,
    imputed: &ImputedOutcomes,
    kernel: &KernelSpec,
    h: f64,
    xs: &[Vec<f64>],
) -> Vec<Result<f64>> {
    xs.iter().map(|x| cate_at(data, imputed, kernel, h, x)).collect()
}

/// Units with positive kernel weight at any of `xs`, ascending.
pub fn support_units(data: &Dataset, kernel: &KernelSpec, h: f64, xs: &[Vec<f64>]) -> Vec<usize> {
    (0..data.n())
        .filter(|&i| xs.iter().any(|x| kernel.weight(h, data.x(i), x) > 0.0))
        .collect()
}
