//! Reverse-mode differentiation over NCHW tensors, plus the two networks the
//! enhancement pipeline trains: a U-Net generator and a spectrally normalized
//! PatchGAN discriminator.
//!
//! All ops are generic over [`Scalar`] so the same graph runs in `f32` for
//! training and `f64` for finite-difference gradient checks.

pub mod adam;
mod error;
pub mod model;
pub mod ops;
pub mod patchgan;
mod scalar;
mod tape;
mod tensor;
pub mod unet;
pub mod weights;

pub use adam::{AdamConfig, AdamState};
pub use error::{NnError, Result};
pub use model::{Bound, Model, ModelConfig, NamedTensor};
pub use ops::spectral::spectral_normalize;
pub use patchgan::{build_discriminator, DiscriminatorConfig};
pub use scalar::Scalar;
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
pub use unet::{build_generator, GeneratorConfig};
pub use weights::{load_weights, save_weights};
