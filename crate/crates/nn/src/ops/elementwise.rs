use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tape::{Gradients, Tape, Var};
use crate::tensor::Tensor;

impl<T: Scalar> Tape<T> {
    pub fn relu(&self, x: Var) -> Var {
        self.leaky_relu(x, 0.0)
    }

    pub fn leaky_relu(&self, x: Var, slope: f64) -> Var {
        let xv = self.value(x);
        let s = T::of(slope);
        let value = xv.map(|v| if v > T::zero() { v } else { v * s });
        let backward = Box::new(move |gy: &Tensor<T>, grads: &mut Gradients<T>| {
            let gx = gy
                .data()
                .iter()
                .zip(xv.data())
                .map(|(&g, &v)| if v > T::zero() { g } else { g * s })
                .collect();
            grads.accumulate(x, Tensor::from_vec(gy.shape(), gx).expect("shape"));
        });
        self.custom(value, &[x], backward)
    }

    /// 2x2 mean pooling with stride 2; a trailing odd row or column is dropped.
    pub fn avg_pool2(&self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let (n, c, h, w) = xv.dims4()?;
        let (ho, wo) = (h / 2, w / 2);
        if ho == 0 || wo == 0 {
            return Err(NnError::Shape(format!("avg_pool2: {h}x{w} too small")));
        }
        let mut out = vec![T::zero(); n * c * ho * wo];
        let quarter = T::of(0.25);
        for p in 0..n * c {
            let src = &xv.data()[p * h * w..(p + 1) * h * w];
            let dst = &mut out[p * ho * wo..(p + 1) * ho * wo];
            for oy in 0..ho {
                for ox in 0..wo {
                    let i = 2 * oy * w + 2 * ox;
                    dst[oy * wo + ox] = (src[i] + src[i + 1] + src[i + w] + src[i + w + 1]) * quarter;
                }
            }
        }
        let value = Tensor::from_vec(&[n, c, ho, wo], out)?;
        let backward = Box::new(move |gy: &Tensor<T>, grads: &mut Gradients<T>| {
            let mut gx = vec![T::zero(); n * c * h * w];
            for p in 0..n * c {
                let src = &gy.data()[p * ho * wo..(p + 1) * ho * wo];
                let dst = &mut gx[p * h * w..(p + 1) * h * w];
                for oy in 0..ho {
                    for ox in 0..wo {
                        let g = src[oy * wo + ox] * quarter;
                        let i = 2 * oy * w + 2 * ox;
                        dst[i] = g;
                        dst[i + 1] = g;
                        dst[i + w] = g;
                        dst[i + w + 1] = g;
                    }
                }
            }
            grads.accumulate(x, Tensor::from_vec(&[n, c, h, w], gx).expect("shape"));
        });
        Ok(self.custom(value, &[x], backward))
    }

    /// Nearest-neighbour 2x upsampling.
    pub fn upsample_nn2(&self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let (n, c, h, w) = xv.dims4()?;
        let (ho, wo) = (2 * h, 2 * w);
        let mut out = vec![T::zero(); n * c * ho * wo];
        for p in 0..n * c {
            let src = &xv.data()[p * h * w..(p + 1) * h * w];
            let dst = &mut out[p * ho * wo..(p + 1) * ho * wo];
            for oy in 0..ho {
                for ox in 0..wo {
                    dst[oy * wo + ox] = src[(oy / 2) * w + ox / 2];
                }
            }
        }
        let value = Tensor::from_vec(&[n, c, ho, wo], out)?;
        let backward = Box::new(move |gy: &Tensor<T>, grads: &mut Gradients<T>| {
            let mut gx = vec![T::zero(); n * c * h * w];
            for p in 0..n * c {
                let src = &gy.data()[p * ho * wo..(p + 1) * ho * wo];
                let dst = &mut gx[p * h * w..(p + 1) * h * w];
                for oy in 0..ho {
                    for ox in 0..wo {
                        dst[(oy / 2) * w + ox / 2] += src[oy * wo + ox];
                    }
                }
            }
            grads.accumulate(x, Tensor::from_vec(&[n, c, h, w], gx).expect("shape"));
        });
        Ok(self.custom(value, &[x], backward))
    }

    /// Stacks `b`'s channels after `a`'s.
    pub fn concat_channels(&self, a: Var, b: Var) -> Result<Var> {
        let av = self.value(a);
        let bv = self.value(b);
        let (n, ca, h, w) = av.dims4()?;
        let (nb, cb, hb, wb) = bv.dims4()?;
        if (n, h, w) != (nb, hb, wb) {
            return Err(NnError::Shape(format!(
                "concat_channels: {:?} vs {:?}",
                av.shape(),
                bv.shape()
            )));
        }
        let plane = h * w;
        let c = ca + cb;
        let mut out = Vec::with_capacity(n * c * plane);
        for s in 0..n {
            out.extend_from_slice(&av.data()[s * ca * plane..(s + 1) * ca * plane]);
            out.extend_from_slice(&bv.data()[s * cb * plane..(s + 1) * cb * plane]);
        }
        let value = Tensor::from_vec(&[n, c, h, w], out)?;
        let backward = Box::new(move |gy: &Tensor<T>, grads: &mut Gradients<T>| {
            let g = gy.data();
            if grads.wants(a) {
                let mut ga = Vec::with_capacity(n * ca * plane);
                for s in 0..n {
                    ga.extend_from_slice(&g[s * c * plane..(s * c + ca) * plane]);
                }
                grads.accumulate(a, Tensor::from_vec(&[n, ca, h, w], ga).expect("shape"));
            }
            if grads.wants(b) {
                let mut gb = Vec::with_capacity(n * cb * plane);
                for s in 0..n {
                    gb.extend_from_slice(&g[(s * c + ca) * plane..(s + 1) * c * plane]);
                }
                grads.accumulate(b, Tensor::from_vec(&[n, cb, h, w], gb).expect("shape"));
            }
        });
        Ok(self.custom(value, &[a, b], backward))
    }

    /// Stacks `b`'s batch items after `a`'s.
    pub fn concat_batch(&self, a: Var, b: Var) -> Result<Var> {
        let av = self.value(a);
        let bv = self.value(b);
        if av.shape().len() != 4 || av.shape()[1..] != bv.shape()[1..] {
            return Err(NnError::Shape(format!(
                "concat_batch: {:?} vs {:?}",
                av.shape(),
                bv.shape()
            )));
        }
        let mut shape = av.shape().to_vec();
        shape[0] += bv.shape()[0];
        let mut data = av.data().to_vec();
        data.extend_from_slice(bv.data());
        let value = Tensor::from_vec(&shape, data)?;
        let split = av.numel();
        let (sa, sb) = (av.shape().to_vec(), bv.shape().to_vec());
        let backward = Box::new(move |gy: &Tensor<T>, grads: &mut Gradients<T>| {
            let g = gy.data();
            if grads.wants(a) {
                grads.accumulate(a, Tensor::from_vec(&sa, g[..split].to_vec()).expect("shape"));
            }
            if grads.wants(b) {
                grads.accumulate(b, Tensor::from_vec(&sb, g[split..].to_vec()).expect("shape"));
            }
        });
        Ok(self.custom(value, &[a, b], backward))
    }

    /// Elementwise sum of equally shaped values.
    pub fn add(&self, a: Var, b: Var) -> Result<Var> {
        let av = self.value(a);
        let bv = self.value(b);
        if av.shape() != bv.shape() {
            return Err(NnError::Shape(format!("add: {:?} vs {:?}", av.shape(), bv.shape())));
        }
        let mut value = (*av).clone();
        value.add_assign(&bv);
        let backward = Box::new(move |gy: &Tensor<T>, grads: &mut Gradients<T>| {
            grads.accumulate(a, gy.clone());
            grads.accumulate(b, gy.clone());
        });
        Ok(self.custom(value, &[a, b], backward))
    }

    pub fn scale(&self, x: Var, factor: f64) -> Var {
        let f = T::of(factor);
        let value = self.value(x).map(|v| v * f);
        let backward = Box::new(move |gy: &Tensor<T>, grads: &mut Gradients<T>| {
            grads.accumulate(x, gy.map(|g| g * f));
        });
        self.custom(value, &[x], backward)
    }

    /// Detached copy: same value, no gradient path.
    pub fn detach(&self, x: Var) -> Var {
        self.constant((*self.value(x)).clone())
    }
}
