use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mrisr::degradation::{degrade, sample_psi, DegradationConfig};
use mrisr::eval::{psnr, run_experiment, simulation_data, ssim, ExperimentConfig};
use mrisr::io::{load_grid, save_grid};
use mrisr::kspace::{apply_motion, fft2c, ifft2c, make_mask, sample_phase_profile, MotionSpec};
use mrisr::phantom::{generate_phantoms, PhantomConfig};
use mrisr::recon::{enhance_image, InferenceConfig};
use mrisr::train::train;
use mrisr::{ComplexImage, Error, Result, Rng};
use serde::de::DeserializeOwned;

/// Set to a positive integer to cap the worker threads.
const THREADS_VAR: &str = "MRISR_THREADS";

#[derive(Parser)]
#[command(name = "mrisr", version, about = "MRI super-resolution and motion-artifact removal toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Motion {
    None,
    Random,
    Sinusoidal,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic phantoms as .grd files.
    Phantoms {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Blur and add noise with a freshly sampled degradation.
    Degrade {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Corrupt phase-encoding lines with simulated motion.
    Motion {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        model: Motion,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw an undersampling mask and write it as JSON.
    Mask {
        #[arg(long)]
        width: usize,
        #[arg(long = "R")]
        r: f64,
        #[arg(long, default_value_t = 0.06)]
        acs: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a generator on simulated data described by an experiment config.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Enhance one image by bootstrap aggregation with trained weights.
    Enhance {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long = "N", default_value_t = 15)]
        n: usize,
        #[arg(long = "R", default_value_t = 1.5)]
        r: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest acceleration used in training.
        #[arg(long, default_value_t = 4.0)]
        max_r: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print PSNR and SSIM of a test image against a reference.
    Metrics {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Run the experiment named by the config's `kind`.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
}

fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => e.into(),
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => Ok(fs::create_dir_all(dir)?),
        _ => Ok(()),
    }
}

fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Phantoms { config, out } => {
            let cfg: PhantomConfig = read_config(&config)?;
            fs::create_dir_all(&out)?;
            for (i, g) in generate_phantoms(&cfg)?.iter().enumerate() {
                save_grid(g, out.join(format!("phantom_{i:04}.grd")))?;
            }
            println!("wrote {} phantoms to {}", cfg.count, out.display());
        }
        Command::Degrade { input, config, seed, out } => {
            let cfg: DegradationConfig = read_config(&config)?;
            cfg.validate()?;
            let mut rng = Rng::new(seed);
            let psi = sample_psi(&cfg, &mut rng)?;
            let low = degrade(&load_grid(&input)?, &psi, &mut rng)?;
            create_parent(&out)?;
            save_grid(&low, &out)?;
            println!("{}", serde_json::to_string(&psi)?);
        }
        Command::Motion { input, model, seed, out } => {
            let spec = match model {
                Motion::None => MotionSpec::none(),
                Motion::Random => MotionSpec::random_phase(),
                Motion::Sinusoidal => MotionSpec::sinusoidal(),
            };
            let x = load_grid(&input)?;
            let profile = sample_phase_profile(&spec, x.width(), &mut Rng::new(seed))?;
            let k = apply_motion(&fft2c(&ComplexImage::from_real(&x)), &profile)?;
            create_parent(&out)?;
            save_grid(&ifft2c(&k).magnitude(), &out)?;
            println!("{} corrupted lines", profile.corrupted_lines().len());
        }
        Command::Mask { width, r, acs, seed, out } => {
            let m = make_mask(width, r, acs, &mut Rng::new(seed))?;
            create_parent(&out)?;
            fs::write(&out, serde_json::to_string_pretty(&m)?)?;
            println!("{} of {width} lines selected", m.count());
        }
        Command::Train { config, out } => {
            let cfg: ExperimentConfig = read_config(&config)?;
            cfg.validate()?;
            let data = simulation_data(&cfg)?;
            let result = train(&data.clean, &data.artifact, &cfg.train, Some(&out))?;
            if let Some(last) = result.log.epochs.last() {
                println!(
                    "epoch {}: cycle {:.4}, g_adv {:.4}, d_loss {:.4}",
                    last.epoch, last.cycle, last.g_adv, last.d_loss
                );
            }
            println!("weights in {}", out.display());
        }
        Command::Enhance {
            input,
            weights,
            n,
            r,
            seed,
            max_r,
            out,
        } => {
            let cfg = InferenceConfig {
                n,
                r,
                seed,
                max_training_r: max_r,
                ..Default::default()
            };
            let enhanced = enhance_image(&load_grid(&input)?, &weights, &cfg)?;
            create_parent(&out)?;
            save_grid(&enhanced.image, &out)?;
            fs::write(sidecar(&out), serde_json::to_string_pretty(&enhanced.metadata)?)?;
        }
        Command::Metrics { reference, test } => {
            let (a, b) = (load_grid(&reference)?, load_grid(&test)?);
            println!("psnr {:.6}", psnr(&a, &b)?);
            println!("ssim {:.6}", ssim(&a, &b)?);
        }
        Command::Experiment { config } => {
            let cfg: ExperimentConfig = read_config(&config)?;
            let report = run_experiment(&cfg)?;
            print!("{}", report.to_csv()?);
        }
    }
    Ok(())
}

fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_VAR}={value:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
