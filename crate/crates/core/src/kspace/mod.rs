//! Centered Fourier transforms, the motion-corruption operator, phase-encoding
//! undersampling masks and the composite forward model.

mod fft;
mod forward;
mod mask;
mod motion;

pub use fft::{fft2c, ifft2c};
pub use forward::{forward_model, zero_filled_recon};
pub use mask::{apply_mask, make_mask, Mask};
pub use motion::{
    apply_motion, kappa_y, motion_model, motion_models, sample_phase_profile, MotionModel, MotionSpec,
    PhaseShiftProfile,
};
