use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tape::{Gradients, Tape, Var};
use crate::tensor::Tensor;

impl<T: Scalar> Tape<T> {
    /// Per-element mean absolute difference `mean |a - b|`. The subgradient at
    /// zero difference is zero.
    pub fn mean_abs_diff(&self, a: Var, b: Var) -> Result<Var> {
        let av = self.value(a);
        let bv = self.value(b);
        if av.shape() != bv.shape() {
            return Err(NnError::Shape(format!(
                "mean_abs_diff: {:?} vs {:?}",
                av.shape(),
                bv.shape()
            )));
        }
        let n = T::of(av.numel() as f64);
        let total: T = av.data().iter().zip(bv.data()).map(|(&x, &y)| (x - y).abs()).sum();
        let value = Tensor::scalar(total / n);
        let backward = Box::new(move |gy: &Tensor<T>, grads: &mut Gradients<T>| {
            let g = gy.data()[0] / n;
            let sign: Vec<T> = av
                .data()
                .iter()
                .zip(bv.data())
                .map(|(&x, &y)| {
                    if x > y {
                        g
                    } else if x < y {
                        -g
                    } else {
                        T::zero()
                    }
                })
                .collect();
            if grads.wants(b) {
                let neg = sign.iter().map(|&s| -s).collect();
                grads.accumulate(b, Tensor::from_vec(bv.shape(), neg).expect("shape"));
            }
            grads.accumulate(a, Tensor::from_vec(av.shape(), sign).expect("shape"));
        });
        Ok(self.custom(value, &[a, b], backward))
    }

    /// `mean((x - target)^2)` against a constant target; the least-squares
    /// adversarial objective.
    pub fn mean_sq_to(&self, x: Var, target: f64) -> Var {
        let xv = self.value(x);
        let t = T::of(target);
        let n = T::of(xv.numel() as f64);
        let total: T = xv.data().iter().map(|&v| (v - t) * (v - t)).sum();
        let value = Tensor::scalar(total / n);
        let backward = Box::new(move |gy: &Tensor<T>, grads: &mut Gradients<T>| {
            let g = gy.data()[0] * T::of(2.0) / n;
            grads.accumulate(x, xv.map(|v| (v - t) * g));
        });
        self.custom(value, &[x], backward)
    }

    /// `mean((x - t)^2)` where batch item `b` of `x` is compared with
    /// `targets[b]`.
    pub fn mean_sq_to_each(&self, x: Var, targets: &[f64]) -> Result<Var> {
        let xv = self.value(x);
        let batch = xv.shape().first().copied().unwrap_or(0);
        if batch != targets.len() || batch == 0 {
            return Err(NnError::Shape(format!(
                "mean_sq_to_each: {} targets for shape {:?}",
                targets.len(),
                xv.shape()
            )));
        }
        let per = xv.numel() / batch;
        let t: Vec<T> = targets.iter().map(|&v| T::of(v)).collect();
        let n = T::of(xv.numel() as f64);
        let total: T = xv
            .data()
            .iter()
            .enumerate()
            .map(|(i, &v)| (v - t[i / per]) * (v - t[i / per]))
            .sum();
        let value = Tensor::scalar(total / n);
        let backward = Box::new(move |gy: &Tensor<T>, grads: &mut Gradients<T>| {
            let g = gy.data()[0] * T::of(2.0) / n;
            let data = xv.data().iter().enumerate().map(|(i, &v)| (v - t[i / per]) * g).collect();
            grads.accumulate(x, Tensor::from_vec(xv.shape(), data).expect("shape"));
        });
        Ok(self.custom(value, &[x], backward))
    }
}
