//! Random Gaussian blur plus white noise.

use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{reflect_index, RealGrid};
use crate::rng::Rng;

/// Blur and noise parameters. Both means are zero by construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegradationParams {
    pub mu_k: f64,
    pub sigma_k: f64,
    pub mu_n: f64,
    pub sigma_n: f64,
}

impl DegradationParams {
    pub fn new(sigma_k: f64, sigma_n: f64) -> Result<Self> {
        if !(sigma_k.is_finite() && sigma_k >= 0.0 && sigma_n.is_finite() && sigma_n >= 0.0) {
            return Err(Error::config(format!(
                "sigma_k {sigma_k} and sigma_n {sigma_n} must be finite and nonnegative"
            )));
        }
        Ok(Self {
            mu_k: 0.0,
            sigma_k,
            mu_n: 0.0,
            sigma_n,
        })
    }

    /// No blur, no noise.
    pub fn identity() -> Self {
        Self {
            mu_k: 0.0,
            sigma_k: 0.0,
            mu_n: 0.0,
            sigma_n: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegradationConfig {
    pub beta_a: f64,
    pub beta_b: f64,
    /// Replaces Beta sampling with a constant kernel width.
    pub sigma_k_fixed: Option<f64>,
    pub sigma_n: f64,
    pub enable_noise: bool,
}

impl Default for DegradationConfig {
    fn default() -> Self {
        Self {
            beta_a: 2.0,
            beta_b: 2.0,
            sigma_k_fixed: None,
            sigma_n: 0.01,
            enable_noise: true,
        }
    }
}

impl DegradationConfig {
    /// Neither blur nor noise.
    pub fn identity() -> Self {
        Self {
            sigma_k_fixed: Some(0.0),
            enable_noise: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.sigma_k_fixed {
            Some(s) if !(s.is_finite() && s >= 0.0) => {
                return Err(Error::config(format!("sigma_k_fixed {s} must be nonnegative")))
            }
            None if !(self.beta_a > 0.0 && self.beta_b > 0.0) => {
                return Err(Error::config(format!(
                    "Beta shape parameters ({}, {}) must be positive",
                    self.beta_a, self.beta_b
                )))
            }
            _ => {}
        }
        if !(self.sigma_n.is_finite() && self.sigma_n >= 0.0) {
            return Err(Error::config(format!("sigma_n {} must be nonnegative", self.sigma_n)));
        }
        Ok(())
    }
}

pub fn sample_psi(cfg: &DegradationConfig, rng: &mut Rng) -> Result<DegradationParams> {
    cfg.validate()?;
    let sigma_k = match cfg.sigma_k_fixed {
        Some(s) => s,
        None => Beta::new(cfg.beta_a, cfg.beta_b)
            .map_err(|e| Error::config(format!("Beta({}, {}): {e}", cfg.beta_a, cfg.beta_b)))?
            .sample(rng),
    };
    let sigma_n = if cfg.enable_noise { cfg.sigma_n } else { 0.0 };
    DegradationParams::new(sigma_k, sigma_n)
}

/// Normalized 1-D Gaussian taps on `[-h, h]`, `h = max(1, ceil(3 sigma))`.
/// Widths below 1e-3 give the discrete delta `[0, 1, 0]`.
pub fn gaussian_kernel(sigma_k: f64) -> Vec<f64> {
    if sigma_k < 1e-3 {
        return vec![0.0, 1.0, 0.0];
    }
    let h = ((3.0 * sigma_k).ceil() as i64).max(1);
    let taps: Vec<f64> = (-h..=h)
        .map(|t| (-((t * t) as f64) / (2.0 * sigma_k * sigma_k)).exp())
        .collect();
    let z: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / z).collect()
}

/// Separable correlation of a row-major `h x w` image with a symmetric odd
/// kernel along both axes, half-sample reflect boundaries.
pub fn blur(data: &[f64], h: usize, w: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut rows = vec![0.0; h * w];
    for y in 0..h {
        let src = &data[y * w..(y + 1) * w];
        for x in 0..w {
            rows[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(j, &k)| k * src[reflect_index(x as isize + j as isize - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for (j, &k) in kernel.iter().enumerate() {
            let sy = reflect_index(y as isize + j as isize - r, h);
            let (dst, src) = (&mut out[y * w..(y + 1) * w], &rows[sy * w..(sy + 1) * w]);
            for (d, s) in dst.iter_mut().zip(src) {
                *d += k * s;
            }
        }
    }
    out
}

/// Per-pixel `N(mu_n, sigma_n^2)` draws, or `None` when `sigma_n` is zero.
pub fn sample_noise(psi: &DegradationParams, len: usize, rng: &mut Rng) -> Result<Option<Vec<f64>>> {
    if psi.sigma_n == 0.0 {
        return Ok(None);
    }
    let noise = Normal::new(psi.mu_n, psi.sigma_n).map_err(|e| Error::config(format!("noise distribution: {e}")))?;
    Ok(Some((0..len).map(|_| noise.sample(rng)).collect()))
}

/// Blur with `gaussian_kernel(psi.sigma_k)`, then add `N(0, sigma_n^2)` noise.
pub fn degrade(x: &RealGrid, psi: &DegradationParams, rng: &mut Rng) -> Result<RealGrid> {
    let (h, w) = x.dims();
    let mut out = blur(&x.to_f64(), h, w, &gaussian_kernel(psi.sigma_k));
    if let Some(noise) = sample_noise(psi, out.len(), rng)? {
        for (v, n) in out.iter_mut().zip(noise) {
            *v += n;
        }
    }
    RealGrid::from_f64(h, w, &out)
}
