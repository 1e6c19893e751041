//! Synthetic ellipse phantoms standing in for clinical training slices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RealGrid;
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomConfig {
    pub count: usize,
    /// Side length in pixels; phantoms are square.
    pub size: usize,
    /// Inclusive range of ellipses per phantom.
    pub ellipses: (usize, usize),
    /// Intensity range of each ellipse, within `[0, 1]`.
    pub intensity: (f64, f64),
    pub seed: u64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            count: 200,
            size: 64,
            ellipses: (2, 8),
            intensity: (0.1, 1.0),
            seed: 0,
        }
    }
}

impl PhantomConfig {
    pub fn validate(&self) -> Result<()> {
        if self.size < 16 {
            return Err(Error::config(format!("phantom size {} < 16", self.size)));
        }
        if self.count == 0 {
            return Err(Error::config("phantom count must be at least 1"));
        }
        let (lo, hi) = self.ellipses;
        if lo == 0 || lo > hi {
            return Err(Error::config(format!("bad ellipse count range {lo}..={hi}")));
        }
        let (a, b) = self.intensity;
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
            return Err(Error::config(format!("bad intensity range [{a}, {b}]")));
        }
        Ok(())
    }
}

/// `cfg.count` phantoms, each a clipped sum of randomly placed, rotated,
/// filled ellipses. Pure function of `cfg`.
pub fn generate_phantoms(cfg: &PhantomConfig) -> Result<Vec<RealGrid>> {
    cfg.validate()?;
    let mut rng = Rng::substream(cfg.seed, 0x9a47);
    (0..cfg.count).map(|_| one_phantom(cfg, &mut rng)).collect()
}

fn one_phantom(cfg: &PhantomConfig, rng: &mut Rng) -> Result<RealGrid> {
    let n = cfg.size;
    let half = n as f64 / 2.0;
    let mut acc = vec![0.0f64; n * n];
    let k = cfg.ellipses.0 + rng.below(cfg.ellipses.1 - cfg.ellipses.0 + 1);
    for _ in 0..k {
        let cx = half + rng.uniform(-0.6, 0.6) * half;
        let cy = half + rng.uniform(-0.6, 0.6) * half;
        let a = rng.uniform(0.08, 0.5) * half;
        let b = rng.uniform(0.08, 0.5) * half;
        let theta = rng.uniform(0.0, std::f64::consts::PI);
        let value = rng.uniform(cfg.intensity.0, cfg.intensity.1);
        let (s, c) = theta.sin_cos();
        for r in 0..n {
            let y = r as f64 + 0.5 - cy;
            for col in 0..n {
                let x = col as f64 + 0.5 - cx;
                let u = (x * c + y * s) / a;
                let v = (-x * s + y * c) / b;
                if u * u + v * v <= 1.0 {
                    acc[r * n + col] += value;
                }
            }
        }
    }
    let clipped: Vec<f64> = acc.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    RealGrid::from_f64(n, n, &clipped)
}
