use crate::degradation::{degrade, DegradationParams};
use crate::error::Result;
use crate::grid::{ComplexImage, KGrid, RealGrid};
use crate::rng::Rng;

use super::{apply_mask, apply_motion, fft2c, ifft2c, sample_phase_profile, Mask, MotionSpec};

/// Degrades `x`, corrupts its k-space with a freshly sampled motion profile,
/// undersamples with `m` and returns the zero-filled magnitude image.
pub fn forward_model(
    x: &RealGrid,
    psi: &DegradationParams,
    spec: &MotionSpec,
    m: &Mask,
    rng: &mut Rng,
) -> Result<RealGrid> {
    let low = degrade(x, psi, rng)?;
    let k = fft2c(&ComplexImage::from_real(&low));
    let profile = sample_phase_profile(spec, x.width(), rng)?;
    let k = apply_mask(&apply_motion(&k, &profile)?, m)?;
    Ok(zero_filled_recon(&k))
}

pub fn zero_filled_recon(k: &KGrid) -> RealGrid {
    ifft2c(k).magnitude()
}
