use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::{psnr, ssim};
use super::panels::save_panel;
use super::report::{fingerprint, mean_scores, ImageScores, MetricReport};
use crate::degradation::{sample_psi, DegradationConfig};
use crate::error::{Error, Result};
use crate::grid::{normalize_by_std, RealGrid};
use crate::kspace::{forward_model, Mask, MotionSpec};
use crate::phantom::{generate_phantoms, PhantomConfig};
use crate::recon::{enhance_with, GeneratorRecon, InferenceConfig};
use crate::rng::Rng;
use crate::train::{train, TrainConfig, GENERATOR_FILE};

pub const METRICS_FILE: &str = "metrics.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Registered experiment name: `simulation`, `ablation` or `r_sweep`.
    pub kind: String,
    /// `count` is the number of training images per domain.
    pub phantoms: PhantomConfig,
    pub test_count: usize,
    /// Degradation used to synthesize artifact-domain and test inputs.
    pub degradation: DegradationConfig,
    /// Motion used to synthesize artifact-domain and test inputs.
    pub motion: MotionSpec,
    pub train: TrainConfig,
    /// `max_training_r` is replaced by the training configuration's largest
    /// acceleration.
    pub inference: InferenceConfig,
    pub output_dir: PathBuf,
    /// Pretrained generator; training is skipped when set.
    pub weights: Option<PathBuf>,
    pub r_values: Vec<f64>,
    /// Seed for artifact synthesis.
    pub seed: u64,
    /// Number of test images rendered as PNG panels.
    pub panels: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: "simulation".into(),
            phantoms: PhantomConfig::default(),
            test_count: 20,
            degradation: DegradationConfig::default(),
            motion: MotionSpec::random_phase(),
            train: TrainConfig::default(),
            inference: InferenceConfig::default(),
            output_dir: PathBuf::from("runs"),
            weights: None,
            r_values: vec![1.5, 2.0, 3.0, 4.0],
            seed: 7,
            panels: 4,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        experiment(&self.kind)?;
        self.phantoms.validate()?;
        if self.test_count == 0 {
            return Err(Error::config("test_count must be at least 1"));
        }
        self.degradation.validate()?;
        self.motion.validate()?;
        self.train.validate()?;
        self.inference().validate()
    }

    /// Inference settings bounded by the training accelerations.
    pub fn inference(&self) -> InferenceConfig {
        InferenceConfig {
            max_training_r: self.train.max_acceleration(),
            ..self.inference.clone()
        }
    }

    /// Hash of the configuration without its output location.
    pub fn fingerprint(&self) -> Result<String> {
        fingerprint(&ExperimentConfig {
            output_dir: PathBuf::new(),
            ..self.clone()
        })
    }
}

/// A study driven by an [`ExperimentConfig`], looked up by `kind`.
pub trait Experiment: Sync {
    fn kind(&self) -> &'static str;

    fn run(&self, cfg: &ExperimentConfig) -> Result<MetricReport>;
}

struct Simulation;
struct Ablation;
struct RSweep;

static EXPERIMENTS: [&dyn Experiment; 3] = [&Simulation, &Ablation, &RSweep];

pub fn experiments() -> &'static [&'static dyn Experiment] {
    &EXPERIMENTS
}

pub fn experiment(kind: &str) -> Result<&'static dyn Experiment> {
    EXPERIMENTS
        .iter()
        .copied()
        .find(|e| e.kind() == kind)
        .ok_or_else(|| Error::config(format!("unknown experiment kind {kind:?}")))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricReport> {
    cfg.validate()?;
    experiment(&cfg.kind)?.run(cfg)
}

fn require_kind(cfg: &ExperimentConfig, kind: &str) -> Result<()> {
    if cfg.kind != kind {
        return Err(Error::config(format!("expected a {kind} config, got {:?}", cfg.kind)));
    }
    cfg.validate()
}

pub fn run_simulation_study(cfg: &ExperimentConfig) -> Result<MetricReport> {
    require_kind(cfg, "simulation")?;
    Simulation.run(cfg)
}

pub fn run_ablation(cfg: &ExperimentConfig) -> Result<MetricReport> {
    require_kind(cfg, "ablation")?;
    Ablation.run(cfg)
}

pub fn run_r_sweep(cfg: &ExperimentConfig) -> Result<MetricReport> {
    require_kind(cfg, "r_sweep")?;
    RSweep.run(cfg)
}

/// Degrades, motion-corrupts and magnitude-reconstructs `clean` at full
/// sampling. Noise is added relative to the image's standard deviation; the
/// result is returned in the input's intensity units.
pub fn synthesize_artifact(clean: &RealGrid, deg: &DegradationConfig, motion: &MotionSpec, rng: &mut Rng) -> Result<RealGrid> {
    let (normed, scale) = normalize_by_std(clean)?;
    let psi = sample_psi(deg, rng)?;
    let out = forward_model(&normed, &psi, motion, &Mask::full(clean.width()), rng)?;
    Ok(out.map(|v| (v as f64 * scale) as f32))
}

/// Phantom splits: clean training images, artifact-domain training images
/// synthesized from a disjoint set of phantoms, and held-out test pairs.
#[derive(Clone, Debug)]
pub struct SimulationData {
    pub clean: Vec<RealGrid>,
    pub artifact: Vec<RealGrid>,
    pub test_clean: Vec<RealGrid>,
    pub test_input: Vec<RealGrid>,
}

pub fn simulation_data(cfg: &ExperimentConfig) -> Result<SimulationData> {
    let n = cfg.phantoms.count;
    let all = generate_phantoms(&PhantomConfig {
        count: 2 * n + cfg.test_count,
        ..cfg.phantoms.clone()
    })?;
    let synth = |set: &[RealGrid], stream: u64| -> Result<Vec<RealGrid>> {
        let mut rng = Rng::substream(cfg.seed, stream);
        set.iter()
            .map(|g| synthesize_artifact(g, &cfg.degradation, &cfg.motion, &mut rng))
            .collect()
    };
    let artifact = synth(&all[n..2 * n], 1)?;
    let test_input = synth(&all[2 * n..], 2)?;
    Ok(SimulationData {
        clean: all[..n].to_vec(),
        artifact,
        test_clean: all[2 * n..].to_vec(),
        test_input,
    })
}

fn trained_generator(cfg: &ExperimentConfig, data: &SimulationData, dir: &Path) -> Result<GeneratorRecon> {
    match &cfg.weights {
        Some(path) => GeneratorRecon::load(path),
        None => GeneratorRecon::new(train(&data.clean, &data.artifact, &cfg.train, Some(dir))?.generator),
    }
}

fn score(clean: &RealGrid, input: &RealGrid, output: &RealGrid) -> Result<ImageScores> {
    Ok(ImageScores {
        input_psnr: psnr(clean, input)?,
        input_ssim: ssim(clean, input)?,
        output_psnr: psnr(clean, output)?,
        output_ssim: ssim(clean, output)?,
    })
}

/// Enhances every test input. On failure the rows gathered so far are written
/// to `partial` before the error is returned.
fn evaluate(
    recon: &GeneratorRecon,
    data: &SimulationData,
    inference: &InferenceConfig,
    report: &MetricReport,
    partial: &Path,
) -> Result<(Vec<ImageScores>, Vec<RealGrid>)> {
    let mut scores = Vec::new();
    let mut outputs = Vec::new();
    for (clean, input) in data.test_clean.iter().zip(&data.test_input) {
        let step = enhance_with(input, recon, inference).and_then(|e| Ok((score(clean, input, &e.image)?, e.image)));
        match step {
            Ok((s, img)) => {
                scores.push(s);
                outputs.push(img);
            }
            Err(e) => {
                let mut flushed = report.clone();
                for (i, s) in scores.iter().enumerate() {
                    flushed.push("partial", "partial", &i.to_string(), *s);
                }
                flushed.write_csv(partial)?;
                return Err(e);
            }
        }
    }
    Ok((scores, outputs))
}

fn prepare(cfg: &ExperimentConfig) -> Result<(SimulationData, MetricReport, PathBuf)> {
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("experiment.json"), serde_json::to_string_pretty(cfg)?)?;
    Ok((
        simulation_data(cfg)?,
        MetricReport::new(cfg.fingerprint()?),
        cfg.output_dir.join(METRICS_FILE),
    ))
}

impl Experiment for Simulation {
    fn kind(&self) -> &'static str {
        "simulation"
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<MetricReport> {
        let (data, mut report, csv) = prepare(cfg)?;
        let recon = trained_generator(cfg, &data, &cfg.output_dir.join("train"))?;
        let (scores, outputs) = evaluate(&recon, &data, &cfg.inference(), &report, &csv)?;
        report.push_group(self.kind(), "proposed", &scores);
        report.write_csv(&csv)?;
        let panels = cfg.output_dir.join("panels");
        fs::create_dir_all(&panels)?;
        for i in 0..cfg.panels.min(outputs.len()) {
            save_panel(
                &[&data.test_input[i], &outputs[i]],
                &data.test_clean[i],
                panels.join(format!("test_{i:03}.png")),
            )?;
        }
        Ok(report)
    }
}

/// The four kernel/noise settings of the stochasticity study.
pub fn ablation_variants(base: &DegradationConfig) -> Vec<(String, DegradationConfig)> {
    let mut out = Vec::new();
    for fixed in [true, false] {
        for noise in [false, true] {
            let kernel = if fixed {
                "sigma_k=0.5".to_string()
            } else {
                format!("sigma_k~Beta({},{})", base.beta_a, base.beta_b)
            };
            let label = format!("{kernel}/noise={}", if noise { "on" } else { "off" });
            out.push((
                label,
                DegradationConfig {
                    sigma_k_fixed: fixed.then_some(0.5),
                    enable_noise: noise,
                    ..base.clone()
                },
            ));
        }
    }
    out
}

impl Experiment for Ablation {
    fn kind(&self) -> &'static str {
        "ablation"
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<MetricReport> {
        let (data, mut report, csv) = prepare(cfg)?;
        for (v, (label, degradation)) in ablation_variants(&cfg.train.degradation).into_iter().enumerate() {
            let train_cfg = TrainConfig {
                degradation,
                ..cfg.train.clone()
            };
            let dir = cfg.output_dir.join(format!("variant_{v}"));
            let out = train(&data.clean, &data.artifact, &train_cfg, Some(&dir))?;
            let recon = GeneratorRecon::new(out.generator)?;
            let (scores, _) = evaluate(&recon, &data, &cfg.inference(), &report, &csv)?;
            report.push(self.kind(), &label, "mean", mean_scores(&scores));
            report.write_csv(&csv)?;
        }
        Ok(report)
    }
}

impl Experiment for RSweep {
    fn kind(&self) -> &'static str {
        "r_sweep"
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<MetricReport> {
        let base = cfg.inference();
        for &r in &cfg.r_values {
            InferenceConfig { r, ..base.clone() }.validate()?;
        }
        let (data, mut report, csv) = prepare(cfg)?;
        let recon = trained_generator(cfg, &data, &cfg.output_dir.join("train"))?;
        let mut per_r = Vec::new();
        for &r in &cfg.r_values {
            let (scores, outputs) = evaluate(&recon, &data, &InferenceConfig { r, ..base.clone() }, &report, &csv)?;
            report.push_group(self.kind(), &format!("R={r}"), &scores);
            report.write_csv(&csv)?;
            per_r.push(outputs);
        }
        let panels = cfg.output_dir.join("panels");
        fs::create_dir_all(&panels)?;
        for i in 0..cfg.panels.min(data.test_clean.len()) {
            let mut row: Vec<&RealGrid> = vec![&data.test_input[i]];
            row.extend(per_r.iter().map(|o| &o[i]));
            save_panel(&row, &data.test_clean[i], panels.join(format!("r_sweep_{i:03}.png")))?;
        }
        Ok(report)
    }
}

/// Path of the generator trained by a simulation or sweep run.
pub fn trained_weights(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.join("train").join(GENERATOR_FILE)
}
