use mrisr_nn::{AdamState, Model, ModelConfig, NnError, Scalar, Tape, Tensor, Var};

use super::config::TrainConfig;
use super::physics::{apply_operator, draw_operator};
use crate::error::{Error, Result};
use crate::grid::RealGrid;
use crate::rng::Rng;

/// Clean-domain and artifact-domain images with no correspondence between
/// them. Both sides hold the same number of items.
#[derive(Clone, Debug)]
pub struct UnpairedBatch {
    pub x: Vec<RealGrid>,
    pub z: Vec<RealGrid>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepLosses {
    pub cycle: f64,
    pub g_adv: f64,
    /// `lambda * cycle + g_adv` as evaluated on the tape.
    pub g_total: f64,
    pub d_loss: f64,
}

/// The generator/discriminator pair with their optimizers.
#[derive(Clone, Debug)]
pub struct TrainState<T> {
    pub generator: Model<T>,
    pub discriminator: Model<T>,
    pub g_opt: AdamState<T>,
    pub d_opt: AdamState<T>,
}

impl<T: Scalar> TrainState<T> {
    pub fn new(cfg: &TrainConfig) -> Result<Self> {
        let generator = Model::build(&ModelConfig::Generator(cfg.generator.clone()), cfg.seeds.init)?;
        let discriminator = Model::build(
            &ModelConfig::Discriminator(cfg.discriminator.clone()),
            cfg.seeds.init.wrapping_add(1),
        )?;
        Ok(Self::from_models(cfg, generator, discriminator))
    }

    pub fn from_models(cfg: &TrainConfig, generator: Model<T>, discriminator: Model<T>) -> Self {
        Self {
            g_opt: AdamState::new(cfg.adam.clone(), &generator),
            d_opt: AdamState::new(cfg.adam.clone(), &discriminator),
            generator,
            discriminator,
        }
    }
}

/// Stacks single-channel grids into an `[n, 1, h, w]` tensor.
pub fn grids_to_tensor<T: Scalar>(grids: &[RealGrid]) -> Result<Tensor<T>> {
    let first = grids.first().ok_or_else(|| Error::Shape("empty batch".into()))?;
    let (h, w) = first.dims();
    let mut data = Vec::with_capacity(grids.len() * h * w);
    for g in grids {
        first.ensure_same_dims(g)?;
        data.extend(g.data().iter().map(|&v| T::of(v as f64)));
    }
    Ok(Tensor::from_vec(&[grids.len(), 1, h, w], data)?)
}

/// Inverse of [`grids_to_tensor`].
pub fn tensor_to_grids<T: Scalar>(t: &Tensor<T>) -> Result<Vec<RealGrid>> {
    let (n, c, h, w) = t.dims4()?;
    if c != 1 {
        return Err(Error::Shape(format!("expected one channel, got {c}")));
    }
    (0..n)
        .map(|b| {
            let data = t.data()[b * h * w..(b + 1) * h * w].iter().map(|v| v.f64() as f32).collect();
            RealGrid::new(h, w, data)
        })
        .collect()
}

/// Records `mean|x - G(A1 x)| + mean|z - A2 G(z)|` with fresh operator draws
/// for each branch and batch item. Returns the loss and `G(z)`.
pub fn cycle_loss_on_tape<T: Scalar>(
    tape: &Tape<T>,
    generator: &Model<T>,
    bound: &mrisr_nn::Bound,
    x: &Tensor<T>,
    z: &Tensor<T>,
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<(Var, Var)> {
    let (n, _, h, w) = x.dims4()?;
    let (nz, _, _, _) = z.dims4()?;
    let draws_x = (0..n).map(|_| draw_operator(cfg, h, w, rng)).collect::<Result<Vec<_>>>()?;
    let draws_z = (0..nz).map(|_| draw_operator(cfg, h, w, rng)).collect::<Result<Vec<_>>>()?;

    let xv = tape.constant(x.clone());
    let ax = apply_operator(tape, xv, &draws_x)?;
    let gax = generator.forward(tape, bound, ax)?;
    let first = tape.mean_abs_diff(gax, xv)?;

    let zv = tape.constant(z.clone());
    let gz = generator.forward(tape, bound, zv)?;
    let agz = apply_operator(tape, gz, &draws_z)?;
    let second = tape.mean_abs_diff(agz, zv)?;
    Ok((tape.add(first, second)?, gz))
}

/// Cycle-consistency loss of `generator` on one batch.
pub fn cycle_loss<T: Scalar>(
    generator: &Model<T>,
    x: &[RealGrid],
    z: &[RealGrid],
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<f64> {
    let tape = Tape::new();
    let bound = generator.bind_frozen(&tape);
    let (loss, _) = cycle_loss_on_tape(&tape, generator, &bound, &grids_to_tensor(x)?, &grids_to_tensor(z)?, cfg, rng)?;
    Ok(tape.value(loss).data()[0].f64())
}

/// Least-squares losses from patch scores: `(d_loss, g_loss)`.
pub fn lsgan_from_scores(real: &[f64], fake: &[f64]) -> (f64, f64) {
    let mean = |v: &[f64], t: f64| v.iter().map(|s| (s - t) * (s - t)).sum::<f64>() / v.len() as f64;
    (mean(real, 1.0) + mean(fake, 0.0), mean(fake, 1.0))
}

/// Scores `real` and `fake` with `phi` (without refining its spectral-norm
/// vectors) and returns `(d_loss, g_loss)`.
pub fn lsgan_losses<T: Scalar>(phi: &Model<T>, real: &[RealGrid], fake: &[RealGrid]) -> Result<(f64, f64)> {
    let score = |g: &[RealGrid]| -> Result<Vec<f64>> {
        Ok(phi.infer(&grids_to_tensor::<T>(g)?)?.data().iter().map(|v| v.f64()).collect())
    };
    Ok(lsgan_from_scores(&score(real)?, &score(fake)?))
}

fn check_finite(step: usize, name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Divergence {
            step,
            detail: format!("{name} is {v}"),
        })
    }
}

fn optimizer_error(step: usize, e: NnError) -> Error {
    match e {
        NnError::NonFiniteGradient(detail) => Error::Divergence { step, detail },
        other => other.into(),
    }
}

/// Result of the generator half of a step.
pub struct GeneratorUpdate<T> {
    pub cycle: f64,
    pub g_adv: f64,
    pub g_total: f64,
    /// `G(z)` before the update, reused as the discriminator's fake input.
    pub fake: Tensor<T>,
}

/// One Adam step on the generator for `lambda * cycle + mean((phi(G(z)) - 1)^2)`.
/// The discriminator is read but not modified.
pub fn generator_update<T: Scalar>(
    state: &mut TrainState<T>,
    batch: &UnpairedBatch,
    cfg: &TrainConfig,
    rng: &mut Rng,
    epoch: usize,
    step: usize,
) -> Result<GeneratorUpdate<T>> {
    let x = grids_to_tensor::<T>(&batch.x)?;
    let z = grids_to_tensor::<T>(&batch.z)?;
    let tape = Tape::new();
    let bound = state.generator.bind(&tape);
    let (cycle, gz) = cycle_loss_on_tape(&tape, &state.generator, &bound, &x, &z, cfg, rng)?;
    let frozen = state.discriminator.bind_frozen(&tape);
    let score = state.discriminator.forward(&tape, &frozen, gz)?;
    let g_adv = tape.mean_sq_to(score, 1.0);
    let weighted = tape.scale(cycle, cfg.lambda);
    let total = tape.add(weighted, g_adv)?;

    let value = |v: Var| tape.value(v).data()[0].f64();
    let cycle_v = check_finite(step, "cycle loss", value(cycle))?;
    let g_adv_v = check_finite(step, "generator adversarial loss", value(g_adv))?;
    let g_total = check_finite(step, "generator objective", value(total))?;

    let mut grads = tape.backward(total)?;
    let grads: Vec<Option<Tensor<T>>> = bound.vars().iter().map(|&v| grads.take(v)).collect();
    state
        .g_opt
        .step(&mut state.generator, &grads, epoch)
        .map_err(|e| optimizer_error(step, e))?;
    Ok(GeneratorUpdate {
        cycle: cycle_v,
        g_adv: g_adv_v,
        g_total,
        fake: (*tape.value(gz)).clone(),
    })
}

/// One Adam step on the discriminator for
/// `mean((phi(real) - 1)^2) + mean(phi(fake)^2)`; real and fake are scored in
/// one batch so the spectral-norm vectors advance once. The generator is not
/// touched.
pub fn discriminator_update<T: Scalar>(
    state: &mut TrainState<T>,
    real: &[RealGrid],
    fake: &Tensor<T>,
    epoch: usize,
    step: usize,
) -> Result<f64> {
    let real = grids_to_tensor::<T>(real)?;
    let (n, ..) = real.dims4()?;
    let (nf, ..) = fake.dims4()?;
    if n != nf {
        return Err(Error::Shape(format!("{n} real vs {nf} fake images")));
    }
    let tape = Tape::new();
    let bound = state.discriminator.bind(&tape);
    let rv = tape.constant(real);
    let fv = tape.constant(fake.clone());
    let both = tape.concat_batch(rv, fv)?;
    let scores = state.discriminator.forward_train(&tape, &bound, both)?;
    let targets: Vec<f64> = (0..2 * n).map(|i| if i < n { 1.0 } else { 0.0 }).collect();
    // two equal halves: 2 * mean over all = mean over real + mean over fake
    let loss = tape.scale(tape.mean_sq_to_each(scores, &targets)?, 2.0);
    let d_loss = check_finite(step, "discriminator loss", tape.value(loss).data()[0].f64())?;
    let mut grads = tape.backward(loss)?;
    let grads: Vec<Option<Tensor<T>>> = bound.vars().iter().map(|&v| grads.take(v)).collect();
    state
        .d_opt
        .step(&mut state.discriminator, &grads, epoch)
        .map_err(|e| optimizer_error(step, e))?;
    Ok(d_loss)
}

/// Generator update followed by one discriminator update on the generator's
/// pre-update output for `batch.z`.
pub fn train_step<T: Scalar>(
    state: &mut TrainState<T>,
    batch: &UnpairedBatch,
    cfg: &TrainConfig,
    rng: &mut Rng,
    epoch: usize,
    step: usize,
) -> Result<StepLosses> {
    if batch.x.len() != batch.z.len() || batch.x.is_empty() {
        return Err(Error::Shape(format!(
            "unpaired batch needs equal nonzero sizes, got {} and {}",
            batch.x.len(),
            batch.z.len()
        )));
    }
    let g = generator_update(state, batch, cfg, rng, epoch, step)?;
    let d_loss = discriminator_update(state, &batch.x, &g.fake, epoch, step)?;
    Ok(StepLosses {
        cycle: g.cycle,
        g_adv: g.g_adv,
        g_total: g.g_total,
        d_loss,
    })
}
