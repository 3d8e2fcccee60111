use serde::Serialize;

use super::adjustment::AdjustmentModel;
use super::scheme::WeightScheme;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::WeightRow;

/// Whether a unit's counterfactual arm has been filled in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Provenance {
    /// Counterfactual imputed; factual arm is the observed outcome.
    Imputed,
    /// Not requested; only the observed arm is set.
    Skipped,
}

/// Potential-outcome table `(Y_hat_i(0), Y_hat_i(1))`; unset entries are NaN.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImputedOutcomes {
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    pub provenance: Vec<Provenance>,
}

impl ImputedOutcomes {
    fn observed(data: &Dataset) -> Self {
        let n = data.n();
        let mut out = Self {
            y0: vec![f64::NAN; n],
            y1: vec![f64::NAN; n],
            provenance: vec![Provenance::Skipped; n],
        };
        for i in 0..n {
            if data.treatment(i) == 1 {
                out.y1[i] = data.y(i);
            } else {
                out.y0[i] = data.y(i);
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.y0.len()
    }

    pub fn is_imputed(&self, i: usize) -> bool {
        self.provenance[i] == Provenance::Imputed
    }

    /// `Y_hat_i(1) - Y_hat_i(0)`, if unit `i` was imputed.
    pub fn contrast(&self, i: usize) -> Option<f64> {
        self.is_imputed(i).then(|| self.y1[i] - self.y0[i])
    }
}

/// Imputes the counterfactual of every unit.
pub fn impute_potential_outcomes(
    data: &Dataset,
    scheme: &WeightScheme,
    adjustment: &AdjustmentModel,
) -> Result<ImputedOutcomes> {
    let all: Vec<usize> = (0..data.n()).collect();
    impute_units(data, scheme, adjustment, &all)
}

/// Imputes the counterfactual of the listed units only.
pub fn impute_units(
    data: &Dataset,
    scheme: &WeightScheme,
    adjustment: &AdjustmentModel,
    units: &[usize],
) -> Result<ImputedOutcomes> {
    let rows = scheme.rows(data, units)?;
    impute_with_rows(data, &rows, adjustment)
}

/// `Y_hat_i(w) = sum_j w_{i<-j} (Y_j + mu_hat_w(X_i) - mu_hat_w(X_j))` for
/// the arm `w` opposite to `D_i`.
pub fn impute_with_rows(data: &Dataset, rows: &[WeightRow], adjustment: &AdjustmentModel) -> Result<ImputedOutcomes> {
    let mut out = ImputedOutcomes::observed(data);
    for row in rows {
        let i = row.unit;
        if i >= data.n() {
            return Err(Error::MissingImputation(i));
        }
        let arm = 1 - data.treatment(i);
        let value = if adjustment.is_zero() {
            row.entries.iter().map(|&(j, w)| w * data.y(j)).sum()
        } else {
            let at_i = adjustment.mu(arm, data.x(i));
            row.entries
                .iter()
                .map(|&(j, w)| w * (data.y(j) + at_i - adjustment.mu(arm, data.x(j))))
                .sum()
        };
        if arm == 1 {
            out.y1[i] = value;
        } else {
            out.y0[i] = value;
        }
        out.provenance[i] = Provenance::Imputed;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smoother::ExplicitWeights;

    fn tiny() -> Dataset {
        Dataset::new(1, vec![0.0, 1.0, 2.0, 3.0], vec![1, 1, 0, 0], vec![10.0, 20.0, 1.0, 3.0]).unwrap()
    }

    #[test]
    fn hand_computed_imputation() {
        let data = tiny();
        let mut w = ExplicitWeights::new(4, vec![0.0; 16]).unwrap();
        w.set(0, 2, 0.5);
        w.set(0, 3, 0.5);
        w.set(1, 3, 1.0);
        w.set(2, 0, 0.25);
        w.set(2, 1, 0.75);
        w.set(3, 1, 1.0);
        let out = impute_potential_outcomes(&data, &WeightScheme::Explicit(w), &AdjustmentModel::Zero).unwrap();
        assert_eq!(out.y0, vec![2.0, 3.0, 1.0, 3.0]);
        assert_eq!(out.y1, vec![10.0, 20.0, 17.5, 20.0]);
        assert_eq!(out.contrast(2), Some(16.5));
    }

    #[test]
    fn skipped_units_keep_only_observed_arm() {
        let data = tiny();
        let out = impute_units(&data, &WeightScheme::Knn { k: 1 }, &AdjustmentModel::Zero, &[1]).unwrap();
        assert!(out.is_imputed(1));
        assert!(!out.is_imputed(0));
        assert_eq!(out.y1[0], 10.0);
        assert!(out.y0[0].is_nan());
        assert_eq!(out.contrast(0), None);
        // Nearest control to x=1 is x=2.
        assert_eq!(out.y0[1], 1.0);
    }
}
