use std::fs;
use std::path::Path;
use std::time::Instant;

use mrisr_nn::{save_weights, Model};
use serde::Serialize;

use super::config::TrainConfig;
use super::step::{train_step, TrainState, UnpairedBatch};
use crate::error::{Error, Result};
use crate::grid::{normalize_by_std, RealGrid};
use crate::rng::Rng;

pub const GENERATOR_FILE: &str = "generator.wts";
pub const DISCRIMINATOR_FILE: &str = "discriminator.wts";
pub const LOG_FILE: &str = "train_log.csv";

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    pub cycle: f64,
    pub g_adv: f64,
    pub d_loss: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub cycle: f64,
    pub g_adv: f64,
    pub d_loss: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub steps: Vec<StepRecord>,
    pub epochs: Vec<EpochRecord>,
}

impl TrainLog {
    /// Per-step rows `step,epoch,cycle,g_adv,d_loss`. Timing is left out so
    /// reruns compare byte for byte.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.steps {
            w.serialize(r).map_err(csv_error)?;
        }
        if self.steps.is_empty() {
            w.write_record(["step", "epoch", "cycle", "g_adv", "d_loss"]).map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    fn push_epoch(&mut self, epoch: usize, seconds: f64) {
        let rows: Vec<&StepRecord> = self.steps.iter().filter(|r| r.epoch == epoch).collect();
        let mean = |f: fn(&StepRecord) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / rows.len().max(1) as f64;
        self.epochs.push(EpochRecord {
            epoch,
            cycle: mean(|r| r.cycle),
            g_adv: mean(|r| r.g_adv),
            d_loss: mean(|r| r.d_loss),
            seconds,
        });
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub generator: Model<f32>,
    pub discriminator: Model<f32>,
    pub log: TrainLog,
}

fn normalized(set: &[RealGrid], name: &str) -> Result<Vec<RealGrid>> {
    if set.is_empty() {
        return Err(Error::config(format!("{name} dataset is empty")));
    }
    set.iter()
        .map(|g| {
            set[0].ensure_same_dims(g)?;
            Ok(normalize_by_std(g)?.0)
        })
        .collect()
}

/// Writes through a temporary file so an interrupted write never replaces a
/// good checkpoint.
fn write_atomic(dir: &Path, name: &str, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    write(&tmp)?;
    fs::rename(&tmp, dir.join(name))?;
    Ok(())
}

fn checkpoint(dir: &Path, state: &TrainState<f32>, log: &TrainLog) -> Result<()> {
    write_atomic(dir, GENERATOR_FILE, |p| Ok(save_weights(&state.generator, p)?))?;
    write_atomic(dir, DISCRIMINATOR_FILE, |p| Ok(save_weights(&state.discriminator, p)?))?;
    let csv = log.to_csv()?;
    write_atomic(dir, LOG_FILE, |p| Ok(fs::write(p, csv)?))
}

/// Trains on unpaired clean and artifact images. Every image is divided by
/// its own standard deviation first. Each epoch visits
/// `max(|clean|, |artifact|) / batch_size` batches drawn from independent
/// shuffles of both sets. With `out_dir`, weights and the log are rewritten at
/// every epoch end; on divergence the previous epoch's files stay in place.
pub fn train(clean: &[RealGrid], artifact: &[RealGrid], cfg: &TrainConfig, out_dir: Option<&Path>) -> Result<TrainOutput> {
    cfg.validate()?;
    let clean = normalized(clean, "clean")?;
    let artifact = normalized(artifact, "artifact")?;
    clean[0].ensure_same_dims(&artifact[0])?;
    let multiple = cfg.generator.size_multiple();
    let (h, w) = clean[0].dims();
    if h % multiple != 0 || w % multiple != 0 {
        return Err(Error::config(format!("{h}x{w} images are not divisible by {multiple}")));
    }

    let mut state = TrainState::<f32>::new(cfg)?;
    let mut log = TrainLog::default();
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.json"), serde_json::to_string_pretty(cfg)?)?;
        checkpoint(dir, &state, &log)?;
    }
    let per_epoch = (clean.len().max(artifact.len()) / cfg.batch_size).max(1);
    let mut step = 0;
    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let mut order = Rng::substream(cfg.seeds.data, epoch as u64);
        let mut xi: Vec<usize> = (0..clean.len()).collect();
        let mut zi: Vec<usize> = (0..artifact.len()).collect();
        order.shuffle(&mut xi);
        order.shuffle(&mut zi);
        for b in 0..per_epoch {
            let pick = |idx: &[usize], set: &[RealGrid]| -> Vec<RealGrid> {
                (0..cfg.batch_size)
                    .map(|j| set[idx[(b * cfg.batch_size + j) % idx.len()]].clone())
                    .collect()
            };
            let batch = UnpairedBatch {
                x: pick(&xi, &clean),
                z: pick(&zi, &artifact),
            };
            let mut rng = Rng::substream(cfg.seeds.augment, step as u64);
            let losses = train_step(&mut state, &batch, cfg, &mut rng, epoch, step)?;
            log.steps.push(StepRecord {
                step,
                epoch,
                cycle: losses.cycle,
                g_adv: losses.g_adv,
                d_loss: losses.d_loss,
            });
            step += 1;
        }
        log.push_epoch(epoch, started.elapsed().as_secs_f64());
        if let Some(dir) = out_dir {
            checkpoint(dir, &state, &log)?;
        }
    }
    Ok(TrainOutput {
        generator: state.generator,
        discriminator: state.discriminator,
        log,
    })
}
