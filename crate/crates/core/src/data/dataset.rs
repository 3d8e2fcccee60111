use serde::Serialize;

use crate::error::{Error, Result};

/// `n` observations of `(X, D, Y)` with `X` stored row-major.
///
/// The constructor only checks shapes; use [`Dataset::validate`] for the
/// content invariants (binary treatment, finite entries, nonempty arms).
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    x: Vec<f64>,
    treatment: Vec<u8>,
    y: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n: usize,
    pub n_treated: usize,
    pub n_control: usize,
    /// Row indices whose treatment is neither 0 nor 1.
    pub nonbinary_rows: Vec<usize>,
    /// Row indices with a non-finite covariate or outcome.
    pub nonfinite_rows: Vec<usize>,
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl Dataset {
    pub fn new(dim: usize, x: Vec<f64>, treatment: Vec<u8>, y: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDataset("covariate dimension must be at least 1".into()));
        }
        let n = y.len();
        if treatment.len() != n || x.len() != n * dim {
            return Err(Error::InvalidDataset(format!(
                "shape mismatch: {} outcomes, {} treatments, {} covariate entries for d = {dim}",
                n,
                treatment.len(),
                x.len()
            )));
        }
        Ok(Self { dim, x, treatment, y })
    }

    pub fn from_rows(rows: &[Vec<f64>], treatment: Vec<u8>, y: Vec<f64>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidDataset("ragged covariate rows".into()));
        }
        Self::new(dim, rows.concat(), treatment, y)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn x(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn x_flat(&self) -> &[f64] {
        &self.x
    }

    #[inline]
    pub fn treatment(&self, i: usize) -> u8 {
        self.treatment[i]
    }

    pub fn treatments(&self) -> &[u8] {
        &self.treatment
    }

    #[inline]
    pub fn y(&self, i: usize) -> f64 {
        self.y[i]
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.y
    }

    /// Indices `i` with `D_i == arm`, ascending.
    pub fn arm_indices(&self, arm: u8) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.treatment[i] == arm).collect()
    }

    /// `(n_treated, n_control)`.
    pub fn arm_counts(&self) -> (usize, usize) {
        let n1 = self.treatment.iter().filter(|&&t| t == 1).count();
        let n0 = self.treatment.iter().filter(|&&t| t == 0).count();
        (n1, n0)
    }

    pub fn with_outcomes(&self, y: Vec<f64>) -> Result<Self> {
        Self::new(self.dim, self.x.clone(), self.treatment.clone(), y)
    }

    /// Same covariates and outcomes with every treatment flipped.
    pub fn swap_treatment(&self) -> Self {
        Self {
            dim: self.dim,
            x: self.x.clone(),
            treatment: self.treatment.iter().map(|&t| 1 - t.min(1)).collect(),
            y: self.y.clone(),
        }
    }

    /// Relabels units so that new unit `perm[i]` is old unit `i`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n(), "permutation length");
        let mut x = vec![0.0; self.x.len()];
        let mut treatment = vec![0; self.n()];
        let mut y = vec![0.0; self.n()];
        for (old, &new) in perm.iter().enumerate() {
            x[new * self.dim..(new + 1) * self.dim].copy_from_slice(self.x(old));
            treatment[new] = self.treatment[old];
            y[new] = self.y[old];
        }
        Self { dim: self.dim, x, treatment, y }
    }

    /// Sub-dataset with the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            dim: self.dim,
            x: rows.iter().flat_map(|&i| self.x(i).iter().copied()).collect(),
            treatment: rows.iter().map(|&i| self.treatment[i]).collect(),
            y: rows.iter().map(|&i| self.y[i]).collect(),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let n = self.n();
        let nonbinary_rows: Vec<usize> = (0..n).filter(|&i| self.treatment[i] > 1).collect();
        let nonfinite_rows: Vec<usize> = (0..n)
            .filter(|&i| !self.y[i].is_finite() || self.x(i).iter().any(|v| !v.is_finite()))
            .collect();
        let (n_treated, n_control) = self.arm_counts();

        let mut failures = Vec::new();
        if n < 2 {
            failures.push(format!("need at least 2 observations, got {n}"));
        }
        if n_treated == 0 {
            failures.push("treated arm empty".to_string());
        }
        if n_control == 0 {
            failures.push("control arm empty".to_string());
        }
        if let Some(&i) = nonbinary_rows.first() {
            failures.push(format!(
                "non-binary treatment at row {i} ({} rows total)",
                nonbinary_rows.len()
            ));
        }
        if let Some(&i) = nonfinite_rows.first() {
            failures.push(format!(
                "non-finite entry at row {i} ({} rows total)",
                nonfinite_rows.len()
            ));
        }
        ValidationReport {
            n,
            n_treated,
            n_control,
            nonbinary_rows,
            nonfinite_rows,
            failures,
        }
    }

    /// Fails with the first validation failure, if any.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        match report.failures.first() {
            None => Ok(()),
            Some(msg) => Err(Error::InvalidDataset(msg.clone())),
        }
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}
