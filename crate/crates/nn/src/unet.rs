//! U-Net generator: per level two `conv3x3 -> group norm -> ReLU` blocks,
//! average pooling on the way down, nearest-neighbour unpooling and skip
//! concatenation on the way up, and a final `1x1` projection.

use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::model::{Bound, Initializer, Model, ModelConfig};
use crate::scalar::Scalar;
use crate::tape::{Tape, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    /// Number of pooling steps.
    pub stages: usize,
    /// Channels at full resolution; doubled at every stage.
    pub base_channels: usize,
    pub norm_groups: usize,
    pub in_channels: usize,
    pub out_channels: usize,
}


impl Default for GeneratorConfig {
    /// Desk-scale network for 64x64 inputs.
    fn default() -> Self {
        Self {
            stages: 2,
            base_channels: 8,
            norm_groups: 8,
            in_channels: 1,
            out_channels: 1,
        }
    }
}

impl GeneratorConfig {
    /// Full-size network: four stages from 64 up to 1024 channels.
    pub fn full_scale() -> Self {
        Self {
            stages: 4,
            base_channels: 64,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages == 0 {
            return Err(NnError::Config("generator needs at least one stage".into()));
        }
        if self.base_channels == 0 || self.norm_groups == 0 || self.base_channels % self.norm_groups != 0 {
            return Err(NnError::Config(format!(
                "base_channels {} must be a positive multiple of norm_groups {}",
                self.base_channels, self.norm_groups
            )));
        }
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(NnError::Config("generator channel counts must be positive".into()));
        }
        Ok(())
    }

    pub fn channels_at(&self, level: usize) -> usize {
        self.base_channels << level
    }

    pub fn bottleneck_channels(&self) -> usize {
        self.channels_at(self.stages)
    }

    /// Spatial dimensions must be multiples of this.
    pub fn size_multiple(&self) -> usize {
        1 << self.stages
    }
}

pub fn build_generator<T: Scalar>(cfg: &GeneratorConfig, seed: u64) -> Result<Model<T>> {
    cfg.validate()?;
    let mut init = Initializer::new(seed);
    let mut in_c = cfg.in_channels;
    for level in 0..=cfg.stages {
        let c = cfg.channels_at(level);
        block_params(&mut init, &format!("enc{level}"), in_c, c);
        in_c = c;
    }
    for level in (0..cfg.stages).rev() {
        let c = cfg.channels_at(level);
        block_params(&mut init, &format!("dec{level}"), c + cfg.channels_at(level + 1), c);
    }
    init.conv("out", cfg.out_channels, cfg.base_channels, 1);
    Ok(init.finish(ModelConfig::Generator(cfg.clone())))
}

fn block_params<T: Scalar>(init: &mut Initializer<T>, prefix: &str, in_c: usize, out_c: usize) {
    init.conv(&format!("{prefix}.conv0"), out_c, in_c, 3);
    init.affine(&format!("{prefix}.norm0"), out_c);
    init.conv(&format!("{prefix}.conv1"), out_c, out_c, 3);
    init.affine(&format!("{prefix}.norm1"), out_c);
}

fn block<T: Scalar>(
    model: &Model<T>,
    groups: usize,
    tape: &Tape<T>,
    bound: &Bound,
    prefix: &str,
    mut h: Var,
) -> Result<Var> {
    for j in 0..2 {
        let w = model.var(bound, &format!("{prefix}.conv{j}.weight"))?;
        let b = model.var(bound, &format!("{prefix}.conv{j}.bias"))?;
        let gain = model.var(bound, &format!("{prefix}.norm{j}.gain"))?;
        let off = model.var(bound, &format!("{prefix}.norm{j}.offset"))?;
        h = tape.conv2d(h, w, Some(b), 1, 1)?;
        h = tape.group_norm(h, groups, gain, off)?;
        h = tape.relu(h);
    }
    Ok(h)
}

pub(crate) fn forward<T: Scalar>(
    model: &Model<T>,
    cfg: &GeneratorConfig,
    tape: &Tape<T>,
    bound: &Bound,
    input: Var,
) -> Result<Var> {
    let (_, c, h, w) = tape.value(input).dims4()?;
    let m = cfg.size_multiple();
    if c != cfg.in_channels || h % m != 0 || w % m != 0 {
        return Err(NnError::Shape(format!(
            "generator expects {} channel(s) and sides divisible by {m}, got {c}x{h}x{w}",
            cfg.in_channels
        )));
    }
    let mut skips = Vec::with_capacity(cfg.stages);
    let mut x = input;
    for level in 0..cfg.stages {
        x = block(model, cfg.norm_groups, tape, bound, &format!("enc{level}"), x)?;
        skips.push(x);
        x = tape.avg_pool2(x)?;
    }
    x = block(model, cfg.norm_groups, tape, bound, &format!("enc{}", cfg.stages), x)?;
    for level in (0..cfg.stages).rev() {
        x = tape.upsample_nn2(x)?;
        x = tape.concat_channels(skips[level], x)?;
        x = block(model, cfg.norm_groups, tape, bound, &format!("dec{level}"), x)?;
    }
    let w = model.var(bound, "out.weight")?;
    let b = model.var(bound, "out.bias")?;
    tape.conv1x1(x, w, Some(b))
}
