use std::rc::Rc;

use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tape::{Gradients, Tape, Var};
use crate::tensor::Tensor;

/// Added to the variance before the square root.
pub const NORM_EPS: f64 = 1e-5;

impl<T: Scalar> Tape<T> {
    /// Group normalization with per-channel affine `gain` and `offset`, both `[c]`.
    pub fn group_norm(&self, x: Var, groups: usize, gain: Var, offset: Var) -> Result<Var> {
        let xv = self.value(x);
        let (n, c, h, w) = xv.dims4()?;
        if groups == 0 || c % groups != 0 {
            return Err(NnError::Shape(format!(
                "group_norm: {c} channels not divisible into {groups} groups"
            )));
        }
        let gv = self.value(gain);
        let ov = self.value(offset);
        if gv.shape() != [c] || ov.shape() != [c] {
            return Err(NnError::Shape(format!(
                "group_norm: affine shapes {:?}/{:?} for {c} channels",
                gv.shape(),
                ov.shape()
            )));
        }
        let cg = c / groups;
        let plane = h * w;
        let m = cg * plane;
        let eps = T::of(NORM_EPS);

        let mut xhat = vec![T::zero(); xv.numel()];
        let mut inv_std = vec![T::zero(); n * groups];
        let mut out = vec![T::zero(); xv.numel()];
        for b in 0..n {
            for gi in 0..groups {
                let s = (b * c + gi * cg) * plane;
                let chunk = &xv.data()[s..s + m];
                let mean = chunk.iter().copied().sum::<T>() / T::of(m as f64);
                let var = chunk.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / T::of(m as f64);
                let inv = T::one() / (var + eps).sqrt();
                inv_std[b * groups + gi] = inv;
                for j in 0..m {
                    let xh = (chunk[j] - mean) * inv;
                    let ch = gi * cg + j / plane;
                    xhat[s + j] = xh;
                    out[s + j] = xh * gv.data()[ch] + ov.data()[ch];
                }
            }
        }
        let value = Tensor::from_vec(xv.shape(), out)?;
        let gs = Rc::clone(&gv);
        let backward = Box::new(move |gy: &Tensor<T>, grads: &mut Gradients<T>| {
            let gy = gy.data();
            if grads.wants(gain) || grads.wants(offset) {
                let mut dgain = vec![T::zero(); c];
                let mut doff = vec![T::zero(); c];
                for b in 0..n {
                    for ch in 0..c {
                        let s = (b * c + ch) * plane;
                        for j in s..s + plane {
                            dgain[ch] += gy[j] * xhat[j];
                            doff[ch] += gy[j];
                        }
                    }
                }
                grads.accumulate(gain, Tensor::from_vec(&[c], dgain).expect("gain"));
                grads.accumulate(offset, Tensor::from_vec(&[c], doff).expect("offset"));
            }
            if grads.wants(x) {
                let mut gx = vec![T::zero(); n * c * plane];
                let mf = T::of(m as f64);
                for b in 0..n {
                    for gi in 0..groups {
                        let s = (b * c + gi * cg) * plane;
                        let inv = inv_std[b * groups + gi];
                        let mut sum_d = T::zero();
                        let mut sum_dx = T::zero();
                        for j in 0..m {
                            let d = gy[s + j] * gs.data()[gi * cg + j / plane];
                            sum_d += d;
                            sum_dx += d * xhat[s + j];
                        }
                        for j in 0..m {
                            let d = gy[s + j] * gs.data()[gi * cg + j / plane];
                            gx[s + j] = inv / mf * (mf * d - sum_d - xhat[s + j] * sum_dx);
                        }
                    }
                }
                grads.accumulate(x, Tensor::from_vec(&[n, c, h, w], gx).expect("input"));
            }
        });
        Ok(self.custom(value, &[x, gain, offset], backward))
    }

    /// Per-channel normalization; group normalization with one channel per group.
    pub fn instance_norm(&self, x: Var, gain: Var, offset: Var) -> Result<Var> {
        let c = self.value(x).dims4()?.1;
        self.group_norm(x, c, gain, offset)
    }
}
