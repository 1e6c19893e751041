//! MR image super-resolution and motion-artifact removal: k-space physics,
//! stochastic degradation, unpaired adversarial training, bootstrap
//! reconstruction and evaluation.

pub mod degradation;
pub mod error;
pub mod eval;
pub mod grid;
pub mod io;
pub mod kspace;
pub mod phantom;
pub mod recon;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
pub use grid::{normalize_by_std, ComplexImage, KGrid, RealGrid};
pub use rng::Rng;
