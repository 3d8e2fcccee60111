use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

const SWISS_T_MIN: f64 = 1.5 * PI;
const SWISS_T_MAX: f64 = 4.5 * PI;
const SWISS_WIDTH: f64 = 10.0;
const SWISS_SCALE: f64 = 1.0 / 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    Circle,
    Sphere2,
    SwissRoll,
    FlatSubspace,
}

/// Intrinsic sampling density.
///
/// `Tilted` is `1 + 0.5 sin(theta)` on the circle, `1 + 0.5 z` on the sphere
/// and `1 + 0.5 (2 u_1 - 1)` on the flat cube, each normalised; swiss rolls
/// are always sampled uniformly in their `(t, w)` parameters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    Uniform,
    #[default]
    Tilted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    /// Intrinsic dimension. Fixed by `kind` except for `flat_subspace`.
    pub m: usize,
    /// Ambient dimension.
    pub d: usize,
    #[serde(default)]
    pub embedding_seed: u64,
    #[serde(default)]
    pub density: DensityKind,
    /// Radius of the circle or sphere.
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Fraction of each intrinsic parameter range kept clear of the boundary
    /// when drawing test points (swiss roll and flat cube only).
    #[serde(default = "default_margin")]
    pub edge_margin: f64,
}

fn default_radius() -> f64 {
    1.0
}

fn default_margin() -> f64 {
    0.15
}

impl ManifoldSpec {
    pub fn circle(d: usize) -> Self {
        Self::new(ManifoldKind::Circle, 1, d)
    }

    pub fn sphere2(d: usize) -> Self {
        Self::new(ManifoldKind::Sphere2, 2, d)
    }

    pub fn swiss_roll(d: usize) -> Self {
        Self::new(ManifoldKind::SwissRoll, 2, d)
    }

    pub fn flat(m: usize, d: usize) -> Self {
        Self::new(ManifoldKind::FlatSubspace, m, d)
    }

    fn new(kind: ManifoldKind, m: usize, d: usize) -> Self {
        Self {
            kind,
            m,
            d,
            embedding_seed: 0,
            density: DensityKind::default(),
            radius: 1.0,
            edge_margin: default_margin(),
        }
    }

    pub fn with_density(mut self, density: DensityKind) -> Self {
        self.density = density;
        self
    }

    pub fn with_embedding_seed(mut self, seed: u64) -> Self {
        self.embedding_seed = seed;
        self
    }

    /// Dimension of the canonical space the manifold is first drawn in.
    pub fn canonical_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Circle => 2,
            ManifoldKind::Sphere2 | ManifoldKind::SwissRoll => 3,
            ManifoldKind::FlatSubspace => self.m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidManifold(msg));
        let expected_m = match self.kind {
            ManifoldKind::Circle => Some(1),
            ManifoldKind::Sphere2 | ManifoldKind::SwissRoll => Some(2),
            ManifoldKind::FlatSubspace => None,
        };
        if self.m == 0 {
            return bad("intrinsic dimension must be at least 1".into());
        }
        if let Some(e) = expected_m {
            if self.m != e {
                return bad(format!("{:?} has intrinsic dimension {e}, got m = {}", self.kind, self.m));
            }
        }
        if self.m > self.d {
            return bad(format!("m = {} exceeds ambient dimension d = {}", self.m, self.d));
        }
        if self.canonical_dim() > self.d {
            return bad(format!(
                "{:?} needs ambient dimension at least {}, got d = {}",
                self.kind,
                self.canonical_dim(),
                self.d
            ));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return bad(format!("radius must be positive, got {}", self.radius));
        }
        if !(0.0..0.5).contains(&self.edge_margin) {
            return bad(format!("edge_margin must lie in [0, 0.5), got {}", self.edge_margin));
        }
        Ok(())
    }

    pub fn embedding(&self) -> Embedding {
        Embedding::random(self.canonical_dim(), self.d, self.embedding_seed)
    }

    /// One canonical point drawn from the intrinsic density.
    pub fn sample_canonical<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.sample_with_margin(rng, 0.0)
    }

    /// One canonical point away from the parameter boundary by
    /// `edge_margin` (closed manifolds have no boundary, so this matches
    /// `sample_canonical` there).
    pub fn sample_interior<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.sample_with_margin(rng, self.edge_margin)
    }

    fn sample_with_margin<R: Rng>(&self, rng: &mut R, margin: f64) -> Vec<f64> {
        let tilted = self.density == DensityKind::Tilted;
        match self.kind {
            ManifoldKind::Circle => {
                let theta = loop {
                    let t = rng.random::<f64>() * 2.0 * PI;
                    if !tilted || rng.random::<f64>() * 1.5 <= 1.0 + 0.5 * t.sin() {
                        break t;
                    }
                };
                vec![self.radius * theta.cos(), self.radius * theta.sin()]
            }
            ManifoldKind::Sphere2 => loop {
                let v: [f64; 3] = [
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                ];
                let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                if norm == 0.0 {
                    continue;
                }
                let z = v[2] / norm;
                if !tilted || rng.random::<f64>() * 1.5 <= 1.0 + 0.5 * z {
                    break v.iter().map(|a| self.radius * a / norm).collect();
                }
            },
            ManifoldKind::SwissRoll => {
                let span = SWISS_T_MAX - SWISS_T_MIN;
                let t = SWISS_T_MIN + span * (margin + (1.0 - 2.0 * margin) * rng.random::<f64>());
                let w = SWISS_WIDTH * (margin + (1.0 - 2.0 * margin) * rng.random::<f64>());
                vec![
                    SWISS_SCALE * t * t.cos(),
                    SWISS_SCALE * w,
                    SWISS_SCALE * t * t.sin(),
                ]
            }
            ManifoldKind::FlatSubspace => loop {
                let u: Vec<f64> = (0..self.m)
                    .map(|_| margin + (1.0 - 2.0 * margin) * rng.random::<f64>())
                    .collect();
                if !tilted || rng.random::<f64>() * 1.5 <= 1.0 + 0.5 * (2.0 * u[0] - 1.0) {
                    break u;
                }
            },
        }
    }

    /// Hausdorff density at a canonical point, when it has a closed form.
    pub fn density_at_canonical(&self, u: &[f64]) -> Option<f64> {
        let tilted = self.density == DensityKind::Tilted;
        match self.kind {
            ManifoldKind::Circle => {
                let theta = u[1].atan2(u[0]);
                let shape = if tilted { 1.0 + 0.5 * theta.sin() } else { 1.0 };
                Some(shape / (2.0 * PI * self.radius))
            }
            ManifoldKind::Sphere2 => {
                let norm = u.iter().map(|a| a * a).sum::<f64>().sqrt();
                let shape = if tilted { 1.0 + 0.5 * u[2] / norm } else { 1.0 };
                Some(shape / (4.0 * PI * self.radius * self.radius))
            }
            ManifoldKind::SwissRoll => None,
            ManifoldKind::FlatSubspace => {
                Some(if tilted { 1.0 + 0.5 * (2.0 * u[0] - 1.0) } else { 1.0 })
            }
        }
    }
}

/// Isometric linear embedding `u -> Q u` with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    k: usize,
    d: usize,
    /// Column-major: column `c` is `q[c*d..(c+1)*d]`.
    q: Vec<f64>,
}

impl Embedding {
    /// Gram-Schmidt on Gaussian columns drawn from `seed`.
    pub fn random(k: usize, d: usize, seed: u64) -> Self {
        assert!(k <= d, "cannot embed R^{k} isometrically into R^{d}");
        let mut rng = rng::stream(seed, &[0xE3B]);
        let mut q: Vec<f64> = Vec::with_capacity(k * d);
        while q.len() < k * d {
            let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            // Two passes of modified Gram-Schmidt keep columns orthogonal to
            // ~1e-16.
            for _ in 0..2 {
                for col in q.chunks(d) {
                    let dot: f64 = col.iter().zip(&v).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(col).for_each(|(a, b)| *a -= dot * b);
                }
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm < 1e-6 {
                continue;
            }
            q.extend(v.iter().map(|a| a / norm));
        }
        Self { k, d, q }
    }

    pub fn canonical_dim(&self) -> usize {
        self.k
    }

    pub fn ambient_dim(&self) -> usize {
        self.d
    }

    pub fn embed(&self, u: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.d];
        for (c, &uc) in u.iter().enumerate() {
            let col = &self.q[c * self.d..(c + 1) * self.d];
            x.iter_mut().zip(col).for_each(|(a, b)| *a += uc * b);
        }
        x
    }

    /// `Q^T x`, the canonical coordinates of an on-manifold point.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.q
            .chunks(self.d)
            .map(|col| col.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}
