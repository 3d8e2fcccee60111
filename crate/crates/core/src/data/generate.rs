use rand::Rng;
use rand_distr::StandardNormal;

use super::manifold::{Embedding, ManifoldSpec};
use super::model::{logistic, OutcomeModel, PropensitySpec, SurfaceSpec};
use super::Dataset;
use crate::error::{Error, Result};
use crate::rng;

const PROBE_POINTS: usize = 256;

/// Closed-form truth attached to synthetic data.
///
/// Every function is defined on all of `R^d`; the random directions of the
/// outcome model are drawn in canonical coordinates and embedded, so the
/// same intrinsic point yields the same values for every ambient `d`.
#[derive(Clone, Debug)]
pub struct GeneratedTruth {
    spec: ManifoldSpec,
    model: OutcomeModel,
    embedding: Embedding,
    w0: Vec<f64>,
    w1: Vec<f64>,
    a: Vec<f64>,
    canonical: Vec<f64>,
}

impl GeneratedTruth {
    /// Truth for `(spec, model)` without any attached sample.
    pub fn new(spec: &ManifoldSpec, model: &OutcomeModel) -> Result<Self> {
        spec.validate()?;
        model.validate()?;
        let embedding = spec.embedding();
        let k = spec.canonical_dim();
        let mut dir_rng = rng::stream(model.seed, &[0xD1]);
        let mut direction = |norm: f64| -> Vec<f64> {
            let v: Vec<f64> = (0..k).map(|_| dir_rng.sample(StandardNormal)).collect();
            let len = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            embedding.embed(&v.iter().map(|a| norm * a / len).collect::<Vec<_>>())
        };
        let (w0, w1) = match model.surface {
            SurfaceSpec::Sinusoidal { scale } => (direction(scale), direction(scale)),
            SurfaceSpec::Constant { .. } => (Vec::new(), Vec::new()),
        };
        let a = match model.propensity {
            PropensitySpec::Logistic { scale } => direction(scale),
            PropensitySpec::Constant { .. } => Vec::new(),
        };
        let truth = Self {
            spec: spec.clone(),
            model: model.clone(),
            embedding,
            w0,
            w1,
            a,
            canonical: Vec::new(),
        };
        truth.check_overlap()?;
        Ok(truth)
    }

    fn check_overlap(&self) -> Result<()> {
        let eta = self.model.eta;
        let mut probe = rng::stream(self.model.seed, &[0x9E0B]);
        for _ in 0..PROBE_POINTS {
            let x = self.embedding.embed(&self.spec.sample_canonical(&mut probe));
            let e = self.propensity(&x);
            if !(e >= eta && e <= 1.0 - eta) {
                return Err(Error::InvalidModel(format!(
                    "propensity {e} at a probe point violates the overlap range [{eta}, {}]",
                    1.0 - eta
                )));
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    pub fn model(&self) -> &OutcomeModel {
        &self.model
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    /// Intrinsic dimension.
    pub fn m(&self) -> usize {
        self.spec.m
    }

    /// Canonical (pre-embedding) coordinates of the attached sample,
    /// row-major with `spec.canonical_dim()` columns.
    pub fn canonical_points(&self) -> &[f64] {
        &self.canonical
    }

    pub fn mu(&self, arm: u8, x: &[f64]) -> f64 {
        match self.model.surface {
            SurfaceSpec::Constant { mu0, mu1 } => {
                if arm == 1 {
                    mu1
                } else {
                    mu0
                }
            }
            SurfaceSpec::Sinusoidal { .. } => {
                let base = dot(&self.w0, x).sin();
                if arm == 1 {
                    base + dot(&self.w1, x).cos()
                } else {
                    base
                }
            }
        }
    }

    pub fn tau(&self, x: &[f64]) -> f64 {
        self.mu(1, x) - self.mu(0, x)
    }

    pub fn propensity(&self, x: &[f64]) -> f64 {
        match self.model.propensity {
            PropensitySpec::Constant { value } => value,
            PropensitySpec::Logistic { .. } => {
                let eta = self.model.eta;
                eta + (1.0 - 2.0 * eta) * logistic(dot(&self.a, x))
            }
        }
    }

    /// `sigma_w^2(x) = E[U_w^2 | X = x]`; homoscedastic in this generator.
    pub fn sigma_sq(&self, _arm: u8, _x: &[f64]) -> f64 {
        self.model.noise.variance()
    }

    /// Hausdorff density `f(x)` for on-manifold `x`, when closed-form.
    pub fn density(&self, x: &[f64]) -> Option<f64> {
        self.spec.density_at_canonical(&self.embedding.project(x))
    }

    /// `count` interior points drawn from the manifold with `seed`.
    pub fn test_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut r = rng::stream(seed, &[0x7E57]);
        (0..count)
            .map(|_| self.embedding.embed(&self.spec.sample_interior(&mut r)))
            .collect()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Draws `n` i.i.d. observations on the manifold.
///
/// Intrinsic points, treatment uniforms and noise come from three separate
/// streams of `seed`, so the intrinsic sample does not depend on `spec.d`.
pub fn generate_dataset(
    spec: &ManifoldSpec,
    model: &OutcomeModel,
    n: usize,
    seed: u64,
) -> Result<(Dataset, GeneratedTruth)> {
    if n < 10 {
        return Err(Error::InvalidConfig(format!("need n >= 10, got {n}")));
    }
    let mut truth = GeneratedTruth::new(spec, model)?;
    let mut point_rng = rng::stream(seed, &[1]);
    let mut treat_rng = rng::stream(seed, &[2]);
    let mut noise_rng = rng::stream(seed, &[3]);

    let k = spec.canonical_dim();
    let mut canonical = Vec::with_capacity(n * k);
    let mut x = Vec::with_capacity(n * spec.d);
    let mut treatment = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let u = spec.sample_canonical(&mut point_rng);
        let xi = truth.embedding.embed(&u);
        let arm = u8::from(treat_rng.random::<f64>() < truth.propensity(&xi));
        let yi = truth.mu(arm, &xi) + model.noise.sample(&mut noise_rng);
        canonical.extend_from_slice(&u);
        x.extend_from_slice(&xi);
        treatment.push(arm);
        y.push(yi);
    }
    truth.canonical = canonical;
    Ok((Dataset::new(spec.d, x, treatment, y)?, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::dataset::sq_dist;
    use crate::data::{DensityKind, NoiseSpec};

    #[test]
    fn zero_noise_constant_surfaces_give_y_equal_d() {
        let model = OutcomeModel::constant(0.0, 1.0, 0.5, NoiseSpec::zero());
        let (data, _) = generate_dataset(&ManifoldSpec::circle(2), &model, 100, 1).unwrap();
        for i in 0..data.n() {
            assert_eq!(data.y(i), f64::from(data.treatment(i)));
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let spec = ManifoldSpec::sphere2(5);
        let model = OutcomeModel::default();
        let (a, _) = generate_dataset(&spec, &model, 300, 7).unwrap();
        let (b, _) = generate_dataset(&spec, &model, 300, 7).unwrap();
        assert_eq!(a, b);
        let (c, _) = generate_dataset(&spec, &model, 300, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn circle_points_have_unit_norm_and_balanced_treatment() {
        let spec = ManifoldSpec::circle(10).with_density(DensityKind::Uniform);
        let model = OutcomeModel::default();
        let n = 4000;
        let (data, truth) = generate_dataset(&spec, &model, n, 11).unwrap();
        let mean_norm: f64 = (0..n)
            .map(|i| data.x(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .sum::<f64>()
            / n as f64;
        assert!((mean_norm - 1.0).abs() < 1e-12);
        let p_hat = data.arm_counts().0 as f64 / n as f64;
        let e_bar = (0..n).map(|i| truth.propensity(data.x(i))).sum::<f64>() / n as f64;
        assert!((p_hat - e_bar).abs() <= 3.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn zero_noise_outcomes_are_exact_surfaces() {
        let model = OutcomeModel::default().with_noise(NoiseSpec::zero());
        let (data, truth) = generate_dataset(&ManifoldSpec::swiss_roll(4), &model, 200, 3).unwrap();
        for i in 0..data.n() {
            assert_eq!(data.y(i), truth.mu(data.treatment(i), data.x(i)));
        }
    }

    #[test]
    fn embedding_is_isometric_on_samples() {
        for seed in [0u64, 5, 99] {
            let spec = ManifoldSpec::sphere2(12).with_embedding_seed(seed);
            let (data, truth) = generate_dataset(&spec, &OutcomeModel::default(), 60, 2).unwrap();
            let k = spec.canonical_dim();
            let u = truth.canonical_points();
            for i in 0..data.n() {
                for j in 0..i {
                    let dx = sq_dist(data.x(i), data.x(j)).sqrt();
                    let du = sq_dist(&u[i * k..(i + 1) * k], &u[j * k..(j + 1) * k]).sqrt();
                    assert!((dx - du).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn propensity_outside_overlap_is_rejected() {
        let model = OutcomeModel::default().with_propensity(PropensitySpec::Constant { value: 0.97 });
        let err = generate_dataset(&ManifoldSpec::circle(2), &model, 50, 0).unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn m_above_d_is_rejected() {
        let err = generate_dataset(&ManifoldSpec::flat(4, 3), &OutcomeModel::default(), 50, 0).unwrap_err();
        assert!(matches!(err, Error::InvalidManifold(_)));
    }

    #[test]
    fn intrinsic_draws_do_not_depend_on_ambient_dimension() {
        let model = OutcomeModel::default();
        let (_, t3) = generate_dataset(&ManifoldSpec::circle(3), &model, 500, 21).unwrap();
        let (_, t30) = generate_dataset(&ManifoldSpec::circle(30), &model, 500, 21).unwrap();
        assert_eq!(t3.canonical_points(), t30.canonical_points());
    }
}
