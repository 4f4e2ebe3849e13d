//! Deterministic numerical kernels shared across the pipeline.

pub mod eigen;
pub mod kmeans;
pub mod svm;

pub use eigen::{sym_eigen, SymmetricMatrix};
pub use kmeans::{kmeans_lloyd, KmeansResult};
pub use svm::{decision_value, train_linear_svm, LinearModel};
