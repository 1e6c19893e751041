mod common;

use common::dft_oracle;
use mrisr::degradation::{blur, gaussian_kernel, DegradationParams};
use mrisr::error::{Error, Result};
use mrisr::eval::psnr;
use mrisr::grid::RealGrid;
use mrisr::kspace::{make_mask, Mask};
use mrisr::phantom::{generate_phantoms, PhantomConfig};
use mrisr::recon::*;
use mrisr::Rng;
use mrisr_nn::{GeneratorConfig, Model, ModelConfig};
use rustfft::num_complex::Complex64;

struct Constant(f32);

impl Reconstructor for Constant {
    fn name(&self) -> &str {
        "constant"
    }

    fn reconstruct(&self, img: &RealGrid) -> Result<RealGrid> {
        Ok(RealGrid::filled(img.height(), img.width(), self.0))
    }
}

fn phantom(size: usize, seed: u64) -> RealGrid {
    generate_phantoms(&PhantomConfig {
        count: 1,
        size,
        seed,
        ..Default::default()
    })
    .unwrap()
    .remove(0)
}

fn max_diff(a: &RealGrid, b: &RealGrid) -> f32 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f32::max)
}

#[test]
fn single_full_mask_with_identity_is_identity() {
    let y = phantom(32, 1);
    let cfg = InferenceConfig {
        n: 1,
        r: 1.0,
        ..Default::default()
    };
    let out = bootstrap_reconstruct(&y, &Identity, &cfg, &mut Rng::new(3)).unwrap();
    assert!(max_diff(&out, &y) < 1e-5);
}

#[test]
fn constant_reconstructor_gives_constant() {
    let y = phantom(32, 2);
    for r in [1.5, 2.0, 4.0] {
        let cfg = InferenceConfig { r, ..Default::default() };
        let out = bootstrap_reconstruct(&y, &Constant(0.3), &cfg, &mut Rng::new(9)).unwrap();
        assert!(out.data().iter().all(|v| (v - 0.3).abs() < 1e-6));
    }
}

#[test]
fn impulse_aggregate_matches_direct_dft() {
    let n = 16;
    let mut data = vec![0.0f32; n * n];
    data[5 * n + 9] = 1.0;
    let y = RealGrid::new(n, n, data).unwrap();
    let cfg = InferenceConfig::default();
    let boot = bootstrap_detailed(&y, &Identity, &cfg, &mut Rng::new(21)).unwrap();
    assert_eq!(boot.mask_seeds.len(), 15);

    let x: Vec<Complex64> = y.data().iter().map(|&v| Complex64::new(v as f64, 0.0)).collect();
    let k = dft_oracle(&x, n, n, false);
    let mut mean = vec![0.0f64; n * n];
    for &seed in &boot.mask_seeds {
        let mask = make_mask(n, 1.5, 0.06, &mut Rng::new(seed)).unwrap();
        let masked: Vec<Complex64> = k
            .iter()
            .enumerate()
            .map(|(i, &v)| if mask.is_selected(i % n) { v } else { Complex64::new(0.0, 0.0) })
            .collect();
        for (m, v) in mean.iter_mut().zip(dft_oracle(&masked, n, n, true)) {
            *m += v.norm() / 15.0;
        }
    }
    for (a, b) in boot.image.data().iter().zip(&mean) {
        assert!((*a as f64 - b).abs() < 1e-6, "{a} vs {b}");
    }
}

fn masks(width: usize, count: usize, seed: u64) -> Vec<Mask> {
    let mut rng = Rng::new(seed);
    (0..count).map(|_| make_mask(width, 2.0, 0.06, &mut rng).unwrap()).collect()
}

#[test]
fn identity_aggregate_is_mean_of_zero_filled() {
    let y = phantom(32, 4);
    let ms = masks(32, 6, 1);
    let out = aggregate(&y, &Identity, &ms, &[1.0 / 6.0; 6]).unwrap();
    let singles: Vec<RealGrid> = ms.iter().map(|m| aggregate(&y, &Identity, &[m.clone()], &[1.0]).unwrap()).collect();
    for i in 0..y.len() {
        let mean: f64 = singles.iter().map(|s| s.data()[i] as f64).sum::<f64>() / 6.0;
        assert!((out.data()[i] as f64 - mean).abs() < 1e-6);
    }
}

#[test]
fn exchangeable_under_permutation() {
    let y = phantom(32, 5);
    let ms = masks(32, 4, 2);
    let w = [0.1, 0.2, 0.3, 0.4];
    let a = aggregate(&y, &Identity, &ms, &w).unwrap();
    let order = [2, 0, 3, 1];
    let pm: Vec<Mask> = order.iter().map(|&i| ms[i].clone()).collect();
    let pw: Vec<f64> = order.iter().map(|&i| w[i]).collect();
    let b = aggregate(&y, &Identity, &pm, &pw).unwrap();
    assert!(max_diff(&a, &b) < 1e-6);
}

#[test]
fn wiener_sharpens_known_blur() {
    let clean = phantom(64, 6);
    let kernel = gaussian_kernel(0.9);
    let blurred = RealGrid::from_f64(64, 64, &blur(&clean.to_f64(), 64, 64, &kernel)).unwrap();
    let wiener = OracleWiener {
        psi: DegradationParams::new(0.9, 0.0).unwrap(),
        snr: 1e4,
    };
    let out = wiener.reconstruct(&blurred).unwrap();
    assert!(psnr(&clean, &out).unwrap() > psnr(&clean, &blurred).unwrap());

    let zero = wiener.reconstruct(&RealGrid::zeros(16, 16)).unwrap();
    assert!(zero.data().iter().all(|v| *v == 0.0));

    let ident = OracleWiener {
        psi: DegradationParams::new(0.0, 0.0).unwrap(),
        snr: f64::INFINITY,
    };
    assert!(max_diff(&ident.reconstruct(&clean).unwrap(), &clean) < 1e-4);
}

#[test]
fn registry_builds_by_name() {
    let spec: ReconstructorSpec = serde_json::from_str(r#"{"name": "oracle_wiener", "sigma_k": 0.5, "snr": 100}"#).unwrap();
    assert_eq!(build_reconstructor(&spec).unwrap().name(), "oracle_wiener");
    assert_eq!(build_reconstructor(&ReconstructorSpec::Identity).unwrap().name(), "identity");
    for name in RECONSTRUCTORS {
        assert!(["identity", "oracle_wiener", "generator"].contains(&name));
    }
    let missing = ReconstructorSpec::Generator {
        weights: "/nonexistent/generator.wts".into(),
    };
    assert!(build_reconstructor(&missing).is_err());
}

fn generator() -> GeneratorRecon {
    GeneratorRecon::new(Model::build(&ModelConfig::Generator(GeneratorConfig::default()), 4).unwrap()).unwrap()
}

#[test]
fn enhance_preserves_dims_and_is_seeded() {
    let g = generator();
    let full = phantom(32, 7);
    let input = full.crop(30, 22);
    let cfg = InferenceConfig {
        n: 3,
        ..Default::default()
    };
    let a = enhance_with(&input, &g, &cfg).unwrap();
    let b = enhance_with(&input, &g, &cfg).unwrap();
    assert_eq!(a.image.dims(), (30, 22));
    assert_eq!(a.image, b.image);
    assert_eq!(a.metadata.mask_seeds.len(), 3);
    let other = enhance_with(&input, &g, &InferenceConfig { seed: 1, ..cfg }).unwrap();
    assert_ne!(other.image, a.image);
}

#[test]
fn acceleration_beyond_training_is_rejected() {
    let cfg = InferenceConfig {
        r: 5.0,
        ..Default::default()
    };
    let err = enhance_with(&phantom(32, 8), &generator(), &cfg).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert_eq!(err.exit_code(), 2);
    assert!(bootstrap_reconstruct(&phantom(32, 8), &Identity, &cfg, &mut Rng::new(0)).is_err());
}

#[test]
fn metadata_sidecar_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("generator.wts");
    mrisr_nn::save_weights(generator().model(), &path).unwrap();
    let cfg = InferenceConfig {
        n: 2,
        seed: 11,
        ..Default::default()
    };
    let out = enhance_image(&phantom(32, 9), &path, &cfg).unwrap();
    let json: serde_json::Value = serde_json::to_value(&out.metadata).unwrap();
    assert_eq!(json["N"], 2);
    assert_eq!(json["R"], 1.5);
    assert_eq!(json["seed"], 11);
    assert_eq!(json["weights_file"], path.to_str().unwrap());
    assert_eq!(json["mask_seeds"].as_array().unwrap().len(), 2);
    let mut keys: Vec<&String> = json.as_object().unwrap().keys().collect();
    keys.sort();
    assert_eq!(keys, ["N", "R", "mask_seeds", "seed", "weights_file"]);
}

#[test]
fn config_validation() {
    let bad = [
        InferenceConfig { n: 0, ..Default::default() },
        InferenceConfig { r: 0.5, ..Default::default() },
        InferenceConfig {
            n: 2,
            weights: Some(vec![0.7, 0.7]),
            ..Default::default()
        },
        InferenceConfig {
            n: 2,
            weights: Some(vec![1.5, -0.5]),
            ..Default::default()
        },
    ];
    for cfg in bad {
        assert!(cfg.validate().is_err(), "{cfg:?}");
    }
    let parsed: InferenceConfig = serde_json::from_str(r#"{"N": 4, "R": 2}"#).unwrap();
    assert_eq!((parsed.n, parsed.r), (4, 2.0));
}
