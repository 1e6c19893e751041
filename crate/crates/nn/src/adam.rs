use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::model::Model;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Adam hyper-parameters with a single step decay of the learning rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Epoch (0-based) from which `lr * decay_factor` applies.
    pub decay_epoch: Option<usize>,
    pub decay_factor: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
            decay_epoch: Some(100),
            decay_factor: 0.1,
        }
    }
}

impl AdamConfig {
    pub fn lr_at(&self, epoch: usize) -> f64 {
        match self.decay_epoch {
            Some(d) if epoch >= d => self.lr * self.decay_factor,
            _ => self.lr,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    first: Vec<Tensor<T>>,
    second: Vec<Tensor<T>>,
    step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig, model: &Model<T>) -> Self {
        let zeros = |m: &Model<T>| m.params().iter().map(|p| Tensor::zeros(p.tensor.shape())).collect();
        Self {
            config,
            first: zeros(model),
            second: zeros(model),
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update of every parameter of `model`. `grads` is in
    /// parameter order; a missing gradient counts as zero. Any non-finite
    /// gradient aborts the step before anything is modified.
    pub fn step(&mut self, model: &mut Model<T>, grads: &[Option<Tensor<T>>], epoch: usize) -> Result<()> {
        let params = model.params_mut();
        if grads.len() != params.len() || self.first.len() != params.len() {
            return Err(NnError::Shape(format!(
                "adam: {} gradients for {} parameters",
                grads.len(),
                params.len()
            )));
        }
        for (p, g) in params.iter().zip(grads) {
            if let Some(g) = g {
                if g.shape() != p.tensor.shape() {
                    return Err(NnError::Shape(format!(
                        "adam: gradient {:?} for `{}` {:?}",
                        g.shape(),
                        p.name,
                        p.tensor.shape()
                    )));
                }
                if !g.all_finite() {
                    return Err(NnError::NonFiniteGradient(p.name.clone()));
                }
            }
        }
        self.step += 1;
        let c = &self.config;
        let t = self.step as i32;
        let lr = c.lr_at(epoch);
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = self.first[i].data_mut();
            let v = self.second[i].data_mut();
            let w = p.tensor.data_mut();
            for j in 0..w.len() {
                let gj = g.as_ref().map_or(T::zero(), |g| g.data()[j]);
                m[j] = b1 * m[j] + (T::one() - b1) * gj;
                v[j] = b2 * v[j] + (T::one() - b2) * gj * gj;
                let m_hat = m[j].f64() / bc1;
                let v_hat = v[j].f64() / bc2;
                w[j] -= T::of(lr * m_hat / (v_hat.sqrt() + c.eps));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelConfig, NamedTensor};
    use crate::unet::GeneratorConfig;

    fn scalar_model(w: f64) -> Model<f64> {
        Model::assemble(
            ModelConfig::Generator(GeneratorConfig::default()),
            vec![NamedTensor {
                name: "w".into(),
                tensor: Tensor::scalar(w),
            }],
            vec![],
        )
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut model = scalar_model(0.0);
        let mut adam = AdamState::new(AdamConfig::default(), &model);
        adam.step(&mut model, &[Some(Tensor::scalar(1.0))], 0).unwrap();
        let w = model.params()[0].tensor.data()[0];
        let want = -1e-4 / (1.0 + 1e-8);
        assert!((w - want).abs() < 1e-15, "{w}");
    }

    #[test]
    fn zero_gradient_keeps_weights_and_counts_step() {
        let mut model = scalar_model(0.3);
        let mut adam = AdamState::new(AdamConfig::default(), &model);
        adam.step(&mut model, &[Some(Tensor::scalar(0.0))], 0).unwrap();
        adam.step(&mut model, &[None], 0).unwrap();
        assert_eq!(model.params()[0].tensor.data()[0], 0.3);
        assert_eq!(adam.steps(), 2);
    }

    #[test]
    fn learning_rate_decays_tenfold() {
        let c = AdamConfig::default();
        assert_eq!(c.lr_at(99), 1e-4);
        assert!((c.lr_at(100) - 1e-5).abs() < 1e-20);
        assert!((c.lr_at(149) - 1e-5).abs() < 1e-20);
    }

    #[test]
    fn non_finite_gradient_fails_without_update() {
        let mut model = scalar_model(1.0);
        let mut adam = AdamState::new(AdamConfig::default(), &model);
        let err = adam.step(&mut model, &[Some(Tensor::scalar(f64::NAN))], 0);
        assert!(matches!(err, Err(NnError::NonFiniteGradient(_))));
        assert_eq!(model.params()[0].tensor.data()[0], 1.0);
        assert_eq!(adam.steps(), 0);
    }
}
