use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tape::{Gradients, Tape, Var};
use crate::tensor::Tensor;

/// Leading singular triplet estimate `(sigma, u, v)` of `weight` viewed as an
/// `(out, rest)` matrix, after `iterations` power steps from `u0`.
/// Returns `None` for an all-zero matrix.
fn power_iterate(w: &[f64], rows: usize, cols: usize, u0: &[f64], iterations: usize) -> Option<(f64, Vec<f64>, Vec<f64>)> {
    if w.iter().all(|&x| x == 0.0) {
        return None;
    }
    let mut u = u0.to_vec();
    if !normalize(&mut u) {
        u.fill(1.0);
        normalize(&mut u);
    }
    let mul_wt = |u: &[f64]| -> Vec<f64> {
        let mut v = vec![0.0; cols];
        for (r, &ur) in u.iter().enumerate() {
            for (vc, &x) in v.iter_mut().zip(&w[r * cols..(r + 1) * cols]) {
                *vc += x * ur;
            }
        }
        if !normalize(&mut v) {
            v.fill(1.0);
            normalize(&mut v);
        }
        v
    };
    let mul_w = |v: &[f64]| -> Vec<f64> {
        (0..rows)
            .map(|r| w[r * cols..(r + 1) * cols].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    };
    for _ in 0..iterations {
        let v = mul_wt(&u);
        let mut next = mul_w(&v);
        if !normalize(&mut next) {
            break;
        }
        u = next;
    }
    let v = mul_wt(&u);
    let mut wv = mul_w(&v);
    // |W v| >= u^T W v for v = W^T u / |W^T u|; take the tighter estimate and
    // the matching left vector.
    let sigma = wv.iter().map(|x| x * x).sum::<f64>().sqrt();
    if sigma > 0.0 {
        wv.iter_mut().for_each(|x| *x /= sigma);
        u = wv;
    }
    Some((sigma, u, v))
}

fn normalize(x: &mut [f64]) -> bool {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 && n.is_finite() {
        x.iter_mut().for_each(|v| *v /= n);
        true
    } else {
        false
    }
}

fn matrix_dims<T: Scalar>(weight: &Tensor<T>, u: &Tensor<T>) -> Result<(usize, usize)> {
    let rows = *weight
        .shape()
        .first()
        .ok_or_else(|| NnError::Shape("spectral norm of an empty tensor".into()))?;
    if u.numel() != rows {
        return Err(NnError::Shape(format!(
            "spectral norm: aux vector has {} entries for {rows} rows",
            u.numel()
        )));
    }
    Ok((rows, weight.numel() / rows.max(1)))
}

/// Divides `weight` (reshaped to `(out, rest)`) by its leading singular value,
/// estimated with `iterations` power-iteration steps seeded by `aux`. The
/// refined left singular vector is written back into `aux`. An all-zero
/// weight is returned unchanged and leaves `aux` untouched.
pub fn spectral_normalize<T: Scalar>(weight: &Tensor<T>, aux: &mut Tensor<T>, iterations: usize) -> Result<Tensor<T>> {
    let (rows, cols) = matrix_dims(weight, aux)?;
    let w: Vec<f64> = weight.data().iter().map(|x| x.f64()).collect();
    let u0: Vec<f64> = aux.data().iter().map(|x| x.f64()).collect();
    match power_iterate(&w, rows, cols, &u0, iterations) {
        None => Ok(weight.clone()),
        Some((sigma, u, _)) => {
            for (a, &x) in aux.data_mut().iter_mut().zip(&u) {
                *a = T::of(x);
            }
            Ok(weight.map(|x| T::of(x.f64() / sigma)))
        }
    }
}

impl<T: Scalar> Tape<T> {
    /// Differentiable spectral normalization. The singular vectors are held
    /// constant in the backward pass, so
    /// `dL/dW = G / sigma - <G, W> u v^T / sigma^2`.
    ///
    /// When `update` is false the refined vector is discarded and `aux` is left
    /// as it was.
    pub fn spectral_norm(&self, weight: Var, aux: &mut Tensor<T>, iterations: usize, update: bool) -> Result<Var> {
        let wv = self.value(weight);
        let (rows, cols) = matrix_dims(&wv, aux)?;
        let w: Vec<f64> = wv.data().iter().map(|x| x.f64()).collect();
        let u0: Vec<f64> = aux.data().iter().map(|x| x.f64()).collect();
        let Some((sigma, u, v)) = power_iterate(&w, rows, cols, &u0, iterations) else {
            let backward = Box::new(move |gy: &Tensor<T>, grads: &mut Gradients<T>| {
                grads.accumulate(weight, gy.clone());
            });
            return Ok(self.custom((*wv).clone(), &[weight], backward));
        };
        if update {
            for (a, &x) in aux.data_mut().iter_mut().zip(&u) {
                *a = T::of(x);
            }
        }
        let value = wv.map(|x| T::of(x.f64() / sigma));
        let backward = Box::new(move |gy: &Tensor<T>, grads: &mut Gradients<T>| {
            let g = gy.data();
            let inner: f64 = g.iter().zip(&w).map(|(a, b)| a.f64() * b).sum();
            let k = inner / (sigma * sigma);
            let mut gw = Vec::with_capacity(g.len());
            for r in 0..rows {
                for c in 0..cols {
                    let i = r * cols + c;
                    gw.push(T::of(g[i].f64() / sigma - k * u[r] * v[c]));
                }
            }
            grads.accumulate(weight, Tensor::from_vec(gy.shape(), gw).expect("shape"));
        });
        Ok(self.custom(value, &[weight], backward))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weight_leaves_aux_alone() {
        let w = Tensor::<f64>::zeros(&[2, 3]);
        let mut aux = Tensor::from_vec(&[2], vec![0.6, 0.8]).unwrap();
        let out = spectral_normalize(&w, &mut aux, 3).unwrap();
        assert_eq!(out, w);
        assert_eq!(aux.data(), &[0.6, 0.8]);
    }

    #[test]
    fn orthogonal_matrix_is_unchanged() {
        let (s, c) = (0.6f64, 0.8f64);
        let w = Tensor::from_vec(&[2, 2], vec![c, -s, s, c]).unwrap();
        let mut aux = Tensor::from_vec(&[2], vec![1.0, 0.0]).unwrap();
        let out = spectral_normalize(&w, &mut aux, 5).unwrap();
        for (a, b) in out.data().iter().zip(w.data()) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn aux_length_must_match_rows() {
        let w = Tensor::<f32>::zeros(&[3, 2]);
        let mut aux = Tensor::zeros(&[2]);
        assert!(spectral_normalize(&w, &mut aux, 1).is_err());
    }
}
