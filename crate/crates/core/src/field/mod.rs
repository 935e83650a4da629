//! Gaussian fields over `L₂((0,T))` given by Volterra kernels.

pub mod grid;
pub mod kernel;
pub mod model;
pub mod quad;

pub use grid::TimeGrid;
pub use kernel::{fbm_constant, fbm_k1_squared, KernelSpec, Monotonicity, NormBound, RhoFn};
pub use model::{cosine, cosine_basis, covariance, spectral_norm, FieldModel};
