use rayon::prelude::*;

use crate::data::dataset::sq_dist;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::{forest_weights, Forest, WeightRow};

/// A dense `n x n` weight matrix; entry `(i, j)` is `w_{i<-j}` and only
/// opposite-arm pairs are read.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplicitWeights {
    n: usize,
    w: Vec<f64>,
}

impl ExplicitWeights {
    pub fn new(n: usize, w: Vec<f64>) -> Result<Self> {
        if w.len() != n * n {
            return Err(Error::InvalidConfig(format!("weight matrix needs {} entries, got {}", n * n, w.len())));
        }
        Ok(Self { n, w })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.w[i * self.n + j] = value;
    }
}

/// Source of the smoothing weights `w_{i<-j}`.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum WeightScheme {
    Forest { treated: Forest, control: Forest },
    Knn { k: usize },
    Explicit(ExplicitWeights),
}

impl WeightScheme {
    pub fn row(&self, data: &Dataset, i: usize) -> Result<WeightRow> {
        match self {
            Self::Forest { treated, control } => {
                let forest = if data.treatment(i) == 1 { control } else { treated };
                forest_weights(forest, data, i)
            }
            Self::Knn { k } => knn_weights(data, i, *k),
            Self::Explicit(w) => {
                if w.n != data.n() {
                    return Err(Error::InvalidConfig("weight matrix size differs from n".into()));
                }
                let other = 1 - data.treatment(i);
                let entries = (0..data.n())
                    .filter(|&j| data.treatment(j) == other && w.get(i, j) != 0.0)
                    .map(|j| (j, w.get(i, j)))
                    .collect();
                Ok(WeightRow {
                    unit: i,
                    entries,
                    dropped: Vec::new(),
                    fallback: false,
                    mean_leaf_size: f64::NAN,
                })
            }
        }
    }

    /// Rows for `units`, in order, computed in parallel.
    pub fn rows(&self, data: &Dataset, units: &[usize]) -> Result<Vec<WeightRow>> {
        units.par_iter().map(|&i| self.row(data, i)).collect()
    }
}

/// Uniform `1/k` weights on the `k` nearest opposite-arm units of `X_i`,
/// Euclidean ties going to the smaller index.
pub fn knn_weights(data: &Dataset, i: usize, k: usize) -> Result<WeightRow> {
    let other = 1 - data.treatment(i).min(1);
    let xi = data.x(i);
    let mut pool: Vec<(f64, usize)> = (0..data.n())
        .filter(|&j| data.treatment(j) == other)
        .map(|j| (sq_dist(xi, data.x(j)), j))
        .collect();
    if pool.is_empty() {
        return Err(Error::EmptyArm(other));
    }
    if k == 0 || k > pool.len() {
        return Err(Error::KnnTooLarge {
            k,
            available: pool.len(),
        });
    }
    let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < pool.len() {
        pool.select_nth_unstable_by(k - 1, order);
        pool.truncate(k);
    }
    let mut chosen: Vec<usize> = pool.into_iter().map(|p| p.1).collect();
    chosen.sort_unstable();
    let w = 1.0 / k as f64;
    Ok(WeightRow {
        unit: i,
        entries: chosen.into_iter().map(|j| (j, w)).collect(),
        dropped: Vec::new(),
        fallback: false,
        mean_leaf_size: k as f64,
    })
}
