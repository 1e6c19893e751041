//! PatchGAN discriminator: `blocks` stride-2 `4x4` convolutions, each
//! followed by instance normalization (except the first) and LeakyReLU, then
//! a `1x1` convolution to a one-channel map of patch scores. Every
//! convolution weight is spectrally normalized when enabled.

use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::model::{Bound, Initializer, Model, ModelConfig, NamedTensor};
use crate::scalar::Scalar;
use crate::tape::{Tape, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscriminatorConfig {
    pub blocks: usize,
    pub base_channels: usize,
    pub leaky_slope: f64,
    pub spectral_norm: bool,
    pub power_iterations: usize,
    pub in_channels: usize,
}


impl Default for DiscriminatorConfig {
    fn default() -> Self {
        Self {
            blocks: 3,
            base_channels: 16,
            leaky_slope: 0.2,
            spectral_norm: true,
            power_iterations: 1,
            in_channels: 1,
        }
    }
}

impl DiscriminatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.blocks == 0 || self.base_channels == 0 || self.in_channels == 0 {
            return Err(NnError::Config(
                "discriminator needs at least one block and positive channel counts".into(),
            ));
        }
        if !(self.leaky_slope.is_finite() && self.leaky_slope >= 0.0) {
            return Err(NnError::Config(format!("bad leaky slope {}", self.leaky_slope)));
        }
        Ok(())
    }

    pub fn channels_at(&self, block: usize) -> usize {
        self.base_channels << block
    }

    /// Names of all spectrally normalized convolutions, in forward order.
    pub fn conv_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.blocks).map(|b| format!("block{b}.conv")).collect();
        names.push("out".into());
        names
    }
}

pub fn build_discriminator<T: Scalar>(cfg: &DiscriminatorConfig, seed: u64) -> Result<Model<T>> {
    cfg.validate()?;
    let mut init = Initializer::new(seed);
    let mut in_c = cfg.in_channels;
    for b in 0..cfg.blocks {
        let c = cfg.channels_at(b);
        init.conv(&format!("block{b}.conv"), c, in_c, 4);
        if b > 0 {
            init.affine(&format!("block{b}.norm"), c);
        }
        in_c = c;
    }
    init.conv("out", 1, in_c, 1);
    if cfg.spectral_norm {
        for b in 0..cfg.blocks {
            init.sn_vector(&format!("block{b}.conv"), cfg.channels_at(b));
        }
        init.sn_vector("out", 1);
    }
    Ok(init.finish(ModelConfig::Discriminator(cfg.clone())))
}

fn weight<T: Scalar>(
    model: &Model<T>,
    cfg: &DiscriminatorConfig,
    tape: &Tape<T>,
    bound: &Bound,
    buffers: &mut [NamedTensor<T>],
    name: &str,
) -> Result<Var> {
    let w = model.var(bound, &format!("{name}.weight"))?;
    if !cfg.spectral_norm {
        return Ok(w);
    }
    let key = format!("{name}.sn_u");
    let aux = buffers
        .iter_mut()
        .find(|b| b.name == key)
        .ok_or_else(|| NnError::Config(format!("missing buffer `{key}`")))?;
    tape.spectral_norm(w, &mut aux.tensor, cfg.power_iterations, true)
}

pub(crate) fn forward<T: Scalar>(
    model: &Model<T>,
    cfg: &DiscriminatorConfig,
    tape: &Tape<T>,
    bound: &Bound,
    input: Var,
    buffers: &mut [NamedTensor<T>],
) -> Result<Var> {
    // Refined vectors always land in `buffers`; `Model::forward` hands in a
    // scratch copy.
    let mut x = input;
    for b in 0..cfg.blocks {
        let name = format!("block{b}.conv");
        let w = weight(model, cfg, tape, bound, buffers, &name)?;
        let bias = model.var(bound, &format!("{name}.bias"))?;
        x = tape.conv2d(x, w, Some(bias), 2, 1)?;
        if b > 0 {
            let gain = model.var(bound, &format!("block{b}.norm.gain"))?;
            let off = model.var(bound, &format!("block{b}.norm.offset"))?;
            x = tape.instance_norm(x, gain, off)?;
        }
        x = tape.leaky_relu(x, cfg.leaky_slope);
    }
    let w = weight(model, cfg, tape, bound, buffers, "out")?;
    let bias = model.var(bound, "out.bias")?;
    tape.conv1x1(x, w, Some(bias))
}
