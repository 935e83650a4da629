//! Wiener chaos expansions, Skorokhod integrals and Wick-type evolution
//! equations driven by Gaussian fields with Volterra kernels.

pub mod chaos;
pub mod cli;
pub mod error;
pub mod field;
pub mod montecarlo;
pub mod multiindex;
pub mod skorokhod;
pub mod sode;
pub mod spde;

pub use error::{Error, Result};
