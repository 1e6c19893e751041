use std::path::{Path, PathBuf};

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::reconstructor::{GeneratorRecon, Reconstructor};
use crate::error::{Error, Result};
use crate::grid::{normalize_by_std, ComplexImage, RealGrid};
use crate::kspace::{apply_mask, fft2c, make_mask, zero_filled_recon, Mask};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "R")]
    pub r: f64,
    /// Aggregation weights; uniform `1/N` when absent.
    pub weights: Option<Vec<f64>>,
    pub seed: u64,
    pub acs_fraction: f64,
    /// Largest acceleration the reconstructor was trained with.
    pub max_training_r: f64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            n: 15,
            r: 1.5,
            weights: None,
            seed: 0,
            acs_fraction: 0.06,
            max_training_r: 4.0,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("N must be at least 1"));
        }
        if !(self.r >= 1.0 && self.r.is_finite()) {
            return Err(Error::config(format!("R = {} must be >= 1", self.r)));
        }
        if self.r > self.max_training_r {
            return Err(Error::config(format!(
                "R = {} exceeds the largest training acceleration {}",
                self.r, self.max_training_r
            )));
        }
        if let Some(w) = &self.weights {
            if w.len() != self.n {
                return Err(Error::config(format!("{} weights for N = {}", w.len(), self.n)));
            }
            if w.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(Error::config("weights must be finite and nonnegative"));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::config(format!("weights sum to {total}, not 1")));
            }
        }
        Ok(())
    }

    pub fn resolved_weights(&self) -> Vec<f64> {
        self.weights
            .clone()
            .unwrap_or_else(|| vec![1.0 / self.n as f64; self.n])
    }
}

#[derive(Clone, Debug)]
pub struct Bootstrap {
    pub image: RealGrid,
    /// Seed of the generator each mask was drawn from, in branch order.
    pub mask_seeds: Vec<u64>,
}

/// `sum_n w_n G(|F^-1 T_n F y|)`. Branches run in parallel; the sum is taken
/// in branch order.
pub fn aggregate(y: &RealGrid, recon: &dyn Reconstructor, masks: &[Mask], weights: &[f64]) -> Result<RealGrid> {
    if masks.len() != weights.len() || masks.is_empty() {
        return Err(Error::config(format!("{} masks with {} weights", masks.len(), weights.len())));
    }
    let k = fft2c(&ComplexImage::from_real(y));
    let outputs: Vec<RealGrid> = masks
        .par_iter()
        .map(|m| {
            let out = recon.reconstruct(&zero_filled_recon(&apply_mask(&k, m)?))?;
            y.ensure_same_dims(&out)?;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut acc = vec![0.0f64; y.len()];
    for (out, &w) in outputs.iter().zip(weights) {
        for (a, &v) in acc.iter_mut().zip(out.data()) {
            *a += w * v as f64;
        }
    }
    RealGrid::from_f64(y.height(), y.width(), &acc)
}

/// Draws `cfg.n` independent masks (each from its own recorded seed) and
/// aggregates.
pub fn bootstrap_detailed(y: &RealGrid, recon: &dyn Reconstructor, cfg: &InferenceConfig, rng: &mut Rng) -> Result<Bootstrap> {
    cfg.validate()?;
    let mask_seeds: Vec<u64> = (0..cfg.n).map(|_| rng.next_u64()).collect();
    let masks = mask_seeds
        .iter()
        .map(|&s| make_mask(y.width(), cfg.r, cfg.acs_fraction, &mut Rng::new(s)))
        .collect::<Result<Vec<_>>>()?;
    let image = aggregate(y, recon, &masks, &cfg.resolved_weights())?;
    Ok(Bootstrap { image, mask_seeds })
}

pub fn bootstrap_reconstruct(y: &RealGrid, recon: &dyn Reconstructor, cfg: &InferenceConfig, rng: &mut Rng) -> Result<RealGrid> {
    Ok(bootstrap_detailed(y, recon, cfg, rng)?.image)
}

/// Sidecar written next to an enhanced image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconMetadata {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "R")]
    pub r: f64,
    pub seed: u64,
    pub weights_file: Option<PathBuf>,
    pub mask_seeds: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct Enhanced {
    pub image: RealGrid,
    pub metadata: ReconMetadata,
}

/// Normalizes, reflect-pads to the generator's size multiple, aggregates with
/// masks seeded from `cfg.seed`, crops and undoes the normalization.
pub fn enhance_with(input: &RealGrid, recon: &GeneratorRecon, cfg: &InferenceConfig) -> Result<Enhanced> {
    let (normed, scale) = normalize_by_std(input)?;
    let m = recon.size_multiple();
    let (h, w) = input.dims();
    let padded = normed.pad_reflect(h.div_ceil(m) * m, w.div_ceil(m) * m);
    let boot = bootstrap_detailed(&padded, recon, cfg, &mut Rng::new(cfg.seed))?;
    let image = boot.image.crop(h, w).map(|v| (v as f64 * scale) as f32);
    if let Some(index) = image.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(Enhanced {
        image,
        metadata: ReconMetadata {
            n: cfg.n,
            r: cfg.r,
            seed: cfg.seed,
            weights_file: None,
            mask_seeds: boot.mask_seeds,
        },
    })
}

pub fn enhance_image(input: &RealGrid, weights: &Path, cfg: &InferenceConfig) -> Result<Enhanced> {
    let recon = GeneratorRecon::load(weights)?;
    let mut out = enhance_with(input, &recon, cfg)?;
    out.metadata.weights_file = Some(weights.to_path_buf());
    Ok(out)
}
