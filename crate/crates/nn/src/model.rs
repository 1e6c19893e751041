use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::patchgan::{self, DiscriminatorConfig};
use crate::scalar::Scalar;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;
use crate::unet::{self, GeneratorConfig};

/// Architecture of a [`Model`]; stored verbatim in weight files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Generator(GeneratorConfig),
    Discriminator(DiscriminatorConfig),
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedTensor<T> {
    pub name: String,
    pub tensor: Tensor<T>,
}

/// Named trainable weights plus non-trainable buffers (spectral-norm vectors).
#[derive(Clone, Debug, PartialEq)]
pub struct Model<T> {
    config: ModelConfig,
    params: Vec<NamedTensor<T>>,
    buffers: Vec<NamedTensor<T>>,
    index: HashMap<String, usize>,
}

/// Tape handles of a model's parameters, in parameter order.
#[derive(Clone, Debug)]
pub struct Bound {
    vars: Vec<Var>,
}

impl Bound {
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

impl<T: Scalar> Model<T> {
    pub(crate) fn assemble(config: ModelConfig, params: Vec<NamedTensor<T>>, buffers: Vec<NamedTensor<T>>) -> Self {
        let index = params.iter().enumerate().map(|(i, p)| (p.name.clone(), i)).collect();
        Self {
            config,
            params,
            buffers,
            index,
        }
    }

    /// Freshly initialized model of the given architecture.
    pub fn build(config: &ModelConfig, seed: u64) -> Result<Self> {
        match config {
            ModelConfig::Generator(cfg) => unet::build_generator(cfg, seed),
            ModelConfig::Discriminator(cfg) => patchgan::build_discriminator(cfg, seed),
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &[NamedTensor<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [NamedTensor<T>] {
        &mut self.params
    }

    pub fn buffers(&self) -> &[NamedTensor<T>] {
        &self.buffers
    }

    pub fn buffers_mut(&mut self) -> &mut [NamedTensor<T>] {
        &mut self.buffers
    }

    pub fn param(&self, name: &str) -> Option<&Tensor<T>> {
        self.index.get(name).map(|&i| &self.params[i].tensor)
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.tensor.numel()).sum()
    }

    pub fn cast<U: Scalar>(&self) -> Model<U> {
        let conv = |v: &[NamedTensor<T>]| {
            v.iter()
                .map(|p| NamedTensor {
                    name: p.name.clone(),
                    tensor: p.tensor.cast(),
                })
                .collect()
        };
        Model::assemble(self.config.clone(), conv(&self.params), conv(&self.buffers))
    }

    /// Registers every parameter as a trainable leaf.
    pub fn bind(&self, tape: &Tape<T>) -> Bound {
        Bound {
            vars: self.params.iter().map(|p| tape.param(p.tensor.clone())).collect(),
        }
    }

    /// Registers parameters as constants: gradients flow through the model to
    /// its input but not into its weights.
    pub fn bind_frozen(&self, tape: &Tape<T>) -> Bound {
        Bound {
            vars: self.params.iter().map(|p| tape.constant(p.tensor.clone())).collect(),
        }
    }

    pub(crate) fn var(&self, bound: &Bound, name: &str) -> Result<Var> {
        self.index
            .get(name)
            .map(|&i| bound.vars[i])
            .ok_or_else(|| NnError::Config(format!("model has no parameter `{name}`")))
    }

    /// Forward pass. Spectral-norm vectors are used but not refined.
    pub fn forward(&self, tape: &Tape<T>, bound: &Bound, input: Var) -> Result<Var> {
        match &self.config {
            ModelConfig::Generator(cfg) => unet::forward(self, cfg, tape, bound, input),
            ModelConfig::Discriminator(cfg) => {
                let mut scratch = self.buffers.clone();
                patchgan::forward(self, cfg, tape, bound, input, &mut scratch)
            }
        }
    }

    /// Forward pass that also refines and stores spectral-norm vectors.
    pub fn forward_train(&mut self, tape: &Tape<T>, bound: &Bound, input: Var) -> Result<Var> {
        match &self.config {
            ModelConfig::Generator(cfg) => unet::forward(self, cfg, tape, bound, input),
            ModelConfig::Discriminator(cfg) => {
                let cfg = cfg.clone();
                let mut buffers = std::mem::take(&mut self.buffers);
                let out = patchgan::forward(self, &cfg, tape, bound, input, &mut buffers);
                self.buffers = buffers;
                out
            }
        }
    }

    /// Gradient-free evaluation on a concrete input.
    pub fn infer(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let tape = Tape::new();
        let bound = self.bind_frozen(&tape);
        let x = tape.constant(input.clone());
        let y = self.forward(&tape, &bound, x)?;
        Ok((*tape.value(y)).clone())
    }
}

/// Deterministic He-normal initializer used by the architecture builders.
pub(crate) struct Initializer<T> {
    rng: ChaCha8Rng,
    pub params: Vec<NamedTensor<T>>,
    pub buffers: Vec<NamedTensor<T>>,
}

impl<T: Scalar> Initializer<T> {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            params: Vec::new(),
            buffers: Vec::new(),
        }
    }

    pub fn conv(&mut self, name: &str, out_c: usize, in_c: usize, k: usize) {
        let fan_in = (in_c * k * k) as f64;
        let normal = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("positive std");
        let data = (0..out_c * in_c * k * k)
            .map(|_| T::of(normal.sample(&mut self.rng)))
            .collect();
        self.push(format!("{name}.weight"), &[out_c, in_c, k, k], data);
        self.push(format!("{name}.bias"), &[out_c], vec![T::zero(); out_c]);
    }

    pub fn affine(&mut self, name: &str, c: usize) {
        self.push(format!("{name}.gain"), &[c], vec![T::one(); c]);
        self.push(format!("{name}.offset"), &[c], vec![T::zero(); c]);
    }

    /// Random unit vector seeding power iteration for `name`'s weight.
    pub fn sn_vector(&mut self, name: &str, rows: usize) {
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let mut u: Vec<f64> = (0..rows).map(|_| normal.sample(&mut self.rng)).collect();
        let n = u.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        u.iter_mut().for_each(|x| *x /= n);
        self.buffers.push(NamedTensor {
            name: format!("{name}.sn_u"),
            tensor: Tensor::from_vec(&[rows], u.into_iter().map(T::of).collect()).expect("shape"),
        });
    }

    fn push(&mut self, name: String, shape: &[usize], data: Vec<T>) {
        self.params.push(NamedTensor {
            name,
            tensor: Tensor::from_vec(shape, data).expect("shape"),
        });
    }

    pub fn finish(self, config: ModelConfig) -> Model<T> {
        Model::assemble(config, self.params, self.buffers)
    }
}
