//! The known clean-to-degraded operator: blur and noise, undersampling, and
//! zero-filled magnitude reconstruction, differentiable on a tape.

use mrisr_nn::{Gradients, Scalar, Tape, Tensor, Var};
use rustfft::num_complex::Complex64;

use super::config::{Acceleration, TrainConfig};
use crate::degradation::{blur, gaussian_kernel, sample_noise, sample_psi, DegradationParams};
use crate::error::{Error, Result};
use crate::grid::{ComplexImage, RealGrid};
use crate::kspace::{apply_mask, fft2c, ifft2c, make_mask, Mask};
use crate::rng::Rng;

/// One realization of the random operator.
#[derive(Clone, Debug)]
pub struct OperatorDraw {
    pub psi: DegradationParams,
    pub acceleration: Acceleration,
    pub mask: Mask,
    kernel: Vec<f64>,
    noise: Option<Vec<f64>>,
}

/// Draws blur and noise parameters, the noise field, an acceleration and a
/// mask, in that order.
pub fn draw_operator(cfg: &TrainConfig, height: usize, width: usize, rng: &mut Rng) -> Result<OperatorDraw> {
    if cfg.accelerations.is_empty() {
        return Err(Error::config("no accelerations configured"));
    }
    let psi = sample_psi(&cfg.degradation, rng)?;
    let noise = sample_noise(&psi, height * width, rng)?;
    let acceleration = cfg.accelerations[rng.below(cfg.accelerations.len())];
    let mask = make_mask(width, acceleration.r, acceleration.acs_fraction, rng)?;
    Ok(OperatorDraw {
        psi,
        acceleration,
        mask,
        kernel: gaussian_kernel(psi.sigma_k),
        noise,
    })
}

impl OperatorDraw {
    /// Magnitude output and the complex image it was taken from.
    fn apply(&self, x: &[f64], h: usize, w: usize) -> Result<(Vec<f64>, Vec<Complex64>)> {
        let mut s = blur(x, h, w, &self.kernel);
        if let Some(noise) = &self.noise {
            for (v, n) in s.iter_mut().zip(noise) {
                *v += n;
            }
        }
        let img = ComplexImage::from_parts(h, w, s.into_iter().map(|v| Complex64::new(v, 0.0)).collect());
        let u = ifft2c(&apply_mask(&fft2c(&img), &self.mask)?).into_data();
        Ok((u.iter().map(|v| v.norm()).collect(), u))
    }

    /// Adjoint of the linear part (blur, then mask projection in k-space)
    /// applied to a complex image; both factors are self-adjoint.
    fn adjoint(&self, g: Vec<Complex64>, h: usize, w: usize) -> Result<Vec<f64>> {
        let k = fft2c(&ComplexImage::from_parts(h, w, g));
        let back = ifft2c(&apply_mask(&k, &self.mask)?);
        let re: Vec<f64> = back.data().iter().map(|v| v.re).collect();
        Ok(blur(&re, h, w, &self.kernel))
    }
}

/// Fresh draw applied to one image.
pub fn forward_degrade_mask(x: &RealGrid, cfg: &TrainConfig, rng: &mut Rng) -> Result<RealGrid> {
    let (h, w) = x.dims();
    let draw = draw_operator(cfg, h, w, rng)?;
    let (out, _) = draw.apply(&x.to_f64(), h, w)?;
    RealGrid::from_f64(h, w, &out)
}

/// Applies `draws[b]` to batch item `b` of a single-channel `[n, 1, h, w]`
/// value. The magnitude's subgradient at zero is taken as zero.
pub fn apply_operator<T: Scalar>(tape: &Tape<T>, x: Var, draws: &[OperatorDraw]) -> Result<Var> {
    let xv = tape.value(x);
    let (n, c, h, w) = xv.dims4()?;
    if c != 1 || n != draws.len() {
        return Err(Error::Shape(format!(
            "operator expects [{}, 1, h, w], got {:?}",
            draws.len(),
            xv.shape()
        )));
    }
    let plane = h * w;
    let mut out = Vec::with_capacity(n * plane);
    let mut phases = Vec::with_capacity(n);
    for (b, draw) in draws.iter().enumerate() {
        let xs: Vec<f64> = xv.data()[b * plane..(b + 1) * plane].iter().map(|v| v.f64()).collect();
        let (mag, u) = draw.apply(&xs, h, w)?;
        out.extend(mag.iter().map(|&m| T::of(m)));
        let phase: Vec<Complex64> = u
            .iter()
            .zip(&mag)
            .map(|(&v, &m)| if m > 0.0 { v / m } else { Complex64::new(0.0, 0.0) })
            .collect();
        phases.push(phase);
    }
    let value = Tensor::from_vec(&[n, 1, h, w], out)?;
    let draws = draws.to_vec();
    let backward = Box::new(move |gy: &Tensor<T>, grads: &mut Gradients<T>| {
        let mut gx = Vec::with_capacity(n * plane);
        for (b, draw) in draws.iter().enumerate() {
            let g: Vec<Complex64> = gy.data()[b * plane..(b + 1) * plane]
                .iter()
                .zip(&phases[b])
                .map(|(g, p)| p * g.f64())
                .collect();
            let back = draw.adjoint(g, h, w).expect("widths checked in forward");
            gx.extend(back.into_iter().map(T::of));
        }
        grads.accumulate(x, Tensor::from_vec(&[n, 1, h, w], gx).expect("shape"));
    });
    Ok(tape.custom(value, &[x], backward))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degradation::DegradationConfig;
    use crate::kspace::zero_filled_recon;

    fn identity_cfg() -> TrainConfig {
        TrainConfig {
            degradation: DegradationConfig::identity(),
            accelerations: vec![Acceleration {
                r: 1.0,
                acs_fraction: 0.06,
            }],
            ..Default::default()
        }
    }

    fn ramp(h: usize, w: usize) -> RealGrid {
        RealGrid::new(h, w, (0..h * w).map(|i| ((i * 7) % 11) as f32 / 10.0).collect()).unwrap()
    }

    #[test]
    fn identity_operator_returns_input() {
        let x = ramp(8, 12);
        let y = forward_degrade_mask(&x, &identity_cfg(), &mut Rng::new(1)).unwrap();
        for (a, b) in x.data().iter().zip(y.data()) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn matches_component_pipeline() {
        let cfg = TrainConfig::default();
        let x = ramp(16, 16);
        let y = forward_degrade_mask(&x, &cfg, &mut Rng::new(9)).unwrap();

        let mut rng = Rng::new(9);
        let psi = sample_psi(&cfg.degradation, &mut rng).unwrap();
        let low = crate::degradation::degrade(&x, &psi, &mut rng).unwrap();
        let acc = cfg.accelerations[rng.below(2)];
        let m = make_mask(16, acc.r, acc.acs_fraction, &mut rng).unwrap();
        let k = apply_mask(&fft2c(&ComplexImage::from_real(&low)), &m).unwrap();
        // degrade rounds to f32 before the transform
        let want = zero_filled_recon(&k);
        for (a, b) in want.data().iter().zip(y.data()) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
        assert!(y.data().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn tape_value_matches_grid_version() {
        let cfg = TrainConfig::default();
        let x = ramp(8, 8);
        let want = forward_degrade_mask(&x, &cfg, &mut Rng::new(4)).unwrap();
        let draw = draw_operator(&cfg, 8, 8, &mut Rng::new(4)).unwrap();
        let tape = Tape::<f64>::new();
        let xv = tape.constant(Tensor::from_vec(&[1, 1, 8, 8], x.to_f64()).unwrap());
        let y = apply_operator(&tape, xv, &[draw]).unwrap();
        for (a, b) in want.data().iter().zip(tape.value(y).data()) {
            assert!((*a as f64 - b).abs() < 1e-6);
        }
    }
}
