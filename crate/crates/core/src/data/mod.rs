//! Datasets and exact-manifold synthetic data with known ground truth.

pub(crate) mod dataset;
mod generate;
mod io;
mod manifold;
mod model;

pub use dataset::{Dataset, ValidationReport};
pub use generate::{generate_dataset, GeneratedTruth};
pub use io::{load_dataset_csv, read_dataset_csv, save_dataset_csv, write_dataset_csv};
pub use manifold::{DensityKind, Embedding, ManifoldKind, ManifoldSpec};
pub use model::{NoiseKind, NoiseSpec, OutcomeModel, PropensitySpec, SurfaceSpec};
