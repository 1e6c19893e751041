use std::f64::consts::PI;
use std::path::PathBuf;

use mrisr_nn::{load_weights, Model, ModelConfig, Tensor};
use serde::{Deserialize, Serialize};

use crate::degradation::{gaussian_kernel, DegradationParams};
use crate::error::{Error, Result};
use crate::grid::{ComplexImage, RealGrid};
use crate::kspace::{fft2c, ifft2c};

/// Single-image map applied to every bootstrap subsample.
pub trait Reconstructor: Send + Sync {
    fn name(&self) -> &str;

    /// Output has the input's dimensions.
    fn reconstruct(&self, img: &RealGrid) -> Result<RealGrid>;
}

pub struct Identity;

impl Reconstructor for Identity {
    fn name(&self) -> &str {
        "identity"
    }

    fn reconstruct(&self, img: &RealGrid) -> Result<RealGrid> {
        Ok(img.clone())
    }
}

/// Frequency-domain Wiener deconvolution with the known blur.
pub struct OracleWiener {
    pub psi: DegradationParams,
    pub snr: f64,
}

/// Discrete transfer function of a centered symmetric kernel at centered
/// frequency index `i` of an `n`-point transform.
fn transfer(kernel: &[f64], i: usize, n: usize) -> f64 {
    let r = kernel.len() / 2;
    let f = i as f64 - (n / 2) as f64;
    kernel
        .iter()
        .enumerate()
        .map(|(j, &k)| k * (2.0 * PI * (j as f64 - r as f64) * f / n as f64).cos())
        .sum()
}

impl Reconstructor for OracleWiener {
    fn name(&self) -> &str {
        "oracle_wiener"
    }

    fn reconstruct(&self, img: &RealGrid) -> Result<RealGrid> {
        let (h, w) = img.dims();
        let kernel = gaussian_kernel(self.psi.sigma_k);
        let hy: Vec<f64> = (0..h).map(|i| transfer(&kernel, i, h)).collect();
        let hx: Vec<f64> = (0..w).map(|i| transfer(&kernel, i, w)).collect();
        let damping = if self.snr.is_finite() { 1.0 / self.snr } else { 0.0 };
        let mut k = fft2c(&ComplexImage::from_real(img));
        for (idx, v) in k.data_mut().iter_mut().enumerate() {
            let t = hy[idx / w] * hx[idx % w];
            let denom = t * t + damping;
            *v *= if denom > 0.0 { t / denom } else { 0.0 };
        }
        Ok(ifft2c(&k).magnitude())
    }
}

/// Wraps a trained generator.
pub struct GeneratorRecon {
    model: Model<f32>,
}

impl GeneratorRecon {
    pub fn new(model: Model<f32>) -> Result<Self> {
        match model.config() {
            ModelConfig::Generator(_) => Ok(Self { model }),
            ModelConfig::Discriminator(_) => Err(Error::config("weights hold a discriminator, not a generator")),
        }
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::new(load_weights(path)?)
    }

    pub fn model(&self) -> &Model<f32> {
        &self.model
    }

    /// Pooling depth the input size must be divisible by.
    pub fn size_multiple(&self) -> usize {
        match self.model.config() {
            ModelConfig::Generator(cfg) => cfg.size_multiple(),
            ModelConfig::Discriminator(_) => 1,
        }
    }
}

impl Reconstructor for GeneratorRecon {
    fn name(&self) -> &str {
        "generator"
    }

    fn reconstruct(&self, img: &RealGrid) -> Result<RealGrid> {
        let (h, w) = img.dims();
        let input = Tensor::from_vec(&[1, 1, h, w], img.data().to_vec())?;
        let out = self.model.infer(&input)?;
        RealGrid::new(h, w, out.into_data())
    }
}

/// Name-tagged choice of reconstructor, as written in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReconstructorSpec {
    Identity,
    OracleWiener { sigma_k: f64, snr: f64 },
    Generator { weights: PathBuf },
}

pub const RECONSTRUCTORS: [&str; 3] = ["identity", "oracle_wiener", "generator"];

pub fn build_reconstructor(spec: &ReconstructorSpec) -> Result<Box<dyn Reconstructor>> {
    Ok(match spec {
        ReconstructorSpec::Identity => Box::new(Identity),
        ReconstructorSpec::OracleWiener { sigma_k, snr } => {
            if !(*snr > 0.0) {
                return Err(Error::config(format!("Wiener snr {snr} must be positive")));
            }
            Box::new(OracleWiener {
                psi: DegradationParams::new(*sigma_k, 0.0)?,
                snr: *snr,
            })
        }
        ReconstructorSpec::Generator { weights } => Box::new(GeneratorRecon::load(weights)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transfer_of_delta_is_one() {
        let k = gaussian_kernel(0.0);
        assert!((0..9).all(|i| (transfer(&k, i, 9) - 1.0).abs() < 1e-15));
        let k = gaussian_kernel(0.7);
        assert!((transfer(&k, 4, 8) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wiener_limits_to_identity() {
        let g = RealGrid::new(4, 4, (0..16).map(|v| v as f32 / 15.0).collect()).unwrap();
        let r = OracleWiener {
            psi: DegradationParams::identity(),
            snr: f64::INFINITY,
        };
        let out = r.reconstruct(&g).unwrap();
        for (a, b) in g.data().iter().zip(out.data()) {
            assert!((a - b).abs() < 1e-4);
        }
        let zero = r.reconstruct(&RealGrid::zeros(4, 4)).unwrap();
        assert!(zero.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spec_json_names() {
        let spec: ReconstructorSpec = serde_json::from_str(r#"{"name":"oracle_wiener","sigma_k":0.5,"snr":100}"#).unwrap();
        assert_eq!(build_reconstructor(&spec).unwrap().name(), "oracle_wiener");
        let spec: ReconstructorSpec = serde_json::from_str(r#"{"name":"identity"}"#).unwrap();
        assert_eq!(build_reconstructor(&spec).unwrap().name(), RECONSTRUCTORS[0]);
        assert!(serde_json::from_str::<ReconstructorSpec>(r#"{"name":"bicubic"}"#).is_err());
    }
}
