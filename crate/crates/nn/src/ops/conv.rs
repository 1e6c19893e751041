use std::rc::Rc;

use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Output extent of a convolution along one axis.
pub fn conv_out_len(len: usize, kernel: usize, stride: usize, pad: usize) -> Option<usize> {
    let padded = len + 2 * pad;
    (padded >= kernel && stride > 0).then(|| (padded - kernel) / stride + 1)
}

struct Geometry {
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    pad: usize,
    ho: usize,
    wo: usize,
}

impl Geometry {
    fn rows(&self) -> usize {
        self.c * self.k * self.k
    }

    fn cols(&self) -> usize {
        self.ho * self.wo
    }
}

/// Output positions `ox` whose input column `ox * stride + kx - pad` lies in
/// `0..w`.
fn valid_span(g: &Geometry, kx: usize) -> (usize, usize) {
    let lo = if kx >= g.pad { 0 } else { (g.pad - kx).div_ceil(g.stride) };
    let hi = if g.w + g.pad > kx {
        ((g.w + g.pad - kx - 1) / g.stride + 1).min(g.wo)
    } else {
        0
    };
    (lo, hi.max(lo))
}

fn im2col<T: Scalar>(x: &[T], g: &Geometry, cols: &mut [T]) {
    let ncol = g.cols();
    for ci in 0..g.c {
        let plane = &x[ci * g.h * g.w..(ci + 1) * g.h * g.w];
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (ci * g.k + ky) * g.k + kx;
                let dst = &mut cols[row * ncol..(row + 1) * ncol];
                let (lo, hi) = valid_span(g, kx);
                for oy in 0..g.ho {
                    let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                    let out_row = &mut dst[oy * g.wo..(oy + 1) * g.wo];
                    if iy < 0 || iy >= g.h as isize {
                        out_row.fill(T::zero());
                        continue;
                    }
                    let src = &plane[iy as usize * g.w..(iy as usize + 1) * g.w];
                    out_row[..lo].fill(T::zero());
                    out_row[hi..].fill(T::zero());
                    if lo < hi {
                        let first = lo * g.stride + kx - g.pad;
                        if g.stride == 1 {
                            out_row[lo..hi].copy_from_slice(&src[first..first + hi - lo]);
                        } else {
                            for (o, s) in out_row[lo..hi].iter_mut().zip(src[first..].iter().step_by(g.stride)) {
                                *o = *s;
                            }
                        }
                    }
                }
            }
        }
    }
}

fn col2im<T: Scalar>(cols: &[T], g: &Geometry, x: &mut [T]) {
    let ncol = g.cols();
    for ci in 0..g.c {
        let plane = &mut x[ci * g.h * g.w..(ci + 1) * g.h * g.w];
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (ci * g.k + ky) * g.k + kx;
                let src = &cols[row * ncol..(row + 1) * ncol];
                let (lo, hi) = valid_span(g, kx);
                if lo >= hi {
                    continue;
                }
                let first = lo * g.stride + kx - g.pad;
                for oy in 0..g.ho {
                    let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                    if iy < 0 || iy >= g.h as isize {
                        continue;
                    }
                    let dst = &mut plane[iy as usize * g.w..(iy as usize + 1) * g.w];
                    let s = &src[oy * g.wo + lo..oy * g.wo + hi];
                    if g.stride == 1 {
                        for (d, v) in dst[first..first + hi - lo].iter_mut().zip(s) {
                            *d += *v;
                        }
                    } else {
                        for (d, v) in dst[first..].iter_mut().step_by(g.stride).zip(s) {
                            *d += *v;
                        }
                    }
                }
            }
        }
    }
}

impl<T: Scalar> Tape<T> {
    /// 2-D cross-correlation of `x: [n, c, h, w]` with `weight: [o, c, k, k]`
    /// and optional `bias: [o]`, zero padding `pad` on every side.
    pub fn conv2d(&self, x: Var, weight: Var, bias: Option<Var>, stride: usize, pad: usize) -> Result<Var> {
        let xv = self.value(x);
        let wv = self.value(weight);
        let (n, c, h, w) = xv.dims4()?;
        let (o, wc, kh, kw) = wv.dims4()?;
        if wc != c || kh != kw {
            return Err(NnError::Shape(format!(
                "conv2d: input {:?} incompatible with square kernel {:?}",
                xv.shape(),
                wv.shape()
            )));
        }
        let bv = match bias {
            Some(b) => {
                let bv = self.value(b);
                if bv.shape() != [o] {
                    return Err(NnError::Shape(format!("conv2d: bias {:?} for {o} outputs", bv.shape())));
                }
                Some(bv)
            }
            None => None,
        };
        let (Some(ho), Some(wo)) = (conv_out_len(h, kh, stride, pad), conv_out_len(w, kw, stride, pad)) else {
            return Err(NnError::Shape(format!(
                "conv2d: kernel {kh} with pad {pad} does not fit {h}x{w}"
            )));
        };
        let g = Geometry {
            c,
            h,
            w,
            k: kh,
            stride,
            pad,
            ho,
            wo,
        };
        let (rows, ncol) = (g.rows(), g.cols());
        let pointwise = kh == 1 && stride == 1 && pad == 0;

        let mut out = vec![T::zero(); n * o * ncol];
        let mut saved_cols: Vec<Vec<T>> = Vec::new();
        let keep_cols = self.requires_grad(weight) && !pointwise;
        let mut cols = if pointwise { Vec::new() } else { vec![T::zero(); rows * ncol] };
        for b in 0..n {
            let xb = &xv.data()[b * c * h * w..(b + 1) * c * h * w];
            let ob = &mut out[b * o * ncol..(b + 1) * o * ncol];
            if let Some(bv) = &bv {
                for (oc, chunk) in ob.chunks_mut(ncol).enumerate() {
                    chunk.fill(bv.data()[oc]);
                }
            }
            let beta = if bv.is_some() { T::one() } else { T::zero() };
            if pointwise {
                T::gemm(o, rows, ncol, wv.data(), false, xb, false, beta, ob);
            } else {
                im2col(xb, &g, &mut cols);
                T::gemm(o, rows, ncol, wv.data(), false, &cols, false, beta, ob);
                if keep_cols {
                    saved_cols.push(cols.clone());
                }
            }
        }
        let value = Tensor::from_vec(&[n, o, ho, wo], out)?;

        let xs = Rc::clone(&xv);
        let ws = Rc::clone(&wv);
        let backward = Box::new(move |gy: &Tensor<T>, grads: &mut crate::tape::Gradients<T>| {
            let gy = gy.data();
            if grads.wants(weight) {
                let mut gw = vec![T::zero(); o * rows];
                for b in 0..n {
                    let gyb = &gy[b * o * ncol..(b + 1) * o * ncol];
                    let colb: &[T] = if pointwise {
                        &xs.data()[b * c * h * w..(b + 1) * c * h * w]
                    } else {
                        &saved_cols[b]
                    };
                    T::gemm(o, ncol, rows, gyb, false, colb, true, T::one(), &mut gw);
                }
                grads.accumulate(weight, Tensor::from_vec(ws.shape(), gw).expect("weight shape"));
            }
            if let Some(bias) = bias {
                if grads.wants(bias) {
                    let mut gb = vec![T::zero(); o];
                    for b in 0..n {
                        for (oc, acc) in gb.iter_mut().enumerate() {
                            let s = (b * o + oc) * ncol;
                            *acc += gy[s..s + ncol].iter().copied().sum::<T>();
                        }
                    }
                    grads.accumulate(bias, Tensor::from_vec(&[o], gb).expect("bias shape"));
                }
            }
            if grads.wants(x) {
                let mut gx = vec![T::zero(); n * c * h * w];
                let mut dcols = vec![T::zero(); rows * ncol];
                for b in 0..n {
                    let gyb = &gy[b * o * ncol..(b + 1) * o * ncol];
                    let gxb = &mut gx[b * c * h * w..(b + 1) * c * h * w];
                    if pointwise {
                        T::gemm(rows, o, ncol, ws.data(), true, gyb, false, T::zero(), gxb);
                    } else {
                        T::gemm(rows, o, ncol, ws.data(), true, gyb, false, T::zero(), &mut dcols);
                        col2im(&dcols, &g, gxb);
                    }
                }
                grads.accumulate(x, Tensor::from_vec(&[n, c, h, w], gx).expect("input shape"));
            }
        });
        let mut inputs = vec![x, weight];
        inputs.extend(bias);
        Ok(self.custom(value, &inputs, backward))
    }

    /// Pointwise channel mixing; `weight` is `[o, c, 1, 1]`.
    pub fn conv1x1(&self, x: Var, weight: Var, bias: Option<Var>) -> Result<Var> {
        self.conv2d(x, weight, bias, 1, 0)
    }
}
