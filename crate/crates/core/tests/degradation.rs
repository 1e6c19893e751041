use mrisr::degradation::*;
use mrisr::grid::RealGrid;
use mrisr::Rng;
use proptest::prelude::*;

fn random_grid(h: usize, w: usize, seed: u64) -> RealGrid {
    let mut rng = Rng::new(seed);
    RealGrid::new(h, w, (0..h * w).map(|_| rng.unit() as f32).collect()).unwrap()
}

/// Mirror with the edge sample repeated, written independently of the
/// library helper.
fn mirror(i: i64, n: i64) -> usize {
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Direct 2-D correlation with the outer-product kernel.
fn conv_oracle(x: &RealGrid, sigma: f64) -> Vec<f64> {
    let h = (3.0 * sigma).ceil().max(1.0) as i64;
    let taps: Vec<f64> = (-h..=h).map(|t| (-(t * t) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let z: f64 = taps.iter().sum();
    let (rows, cols) = (x.height() as i64, x.width() as i64);
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = 0.0;
            for dy in -h..=h {
                for dx in -h..=h {
                    let k = taps[(dy + h) as usize] * taps[(dx + h) as usize] / (z * z);
                    acc += k * x.get(mirror(r + dy, rows), mirror(c + dx, cols)) as f64;
                }
            }
            out.push(acc);
        }
    }
    out
}

fn total_variation(g: &RealGrid) -> f64 {
    let (h, w) = g.dims();
    let mut tv = 0.0;
    for r in 0..h {
        for c in 0..w {
            if c + 1 < w {
                tv += (g.get(r, c + 1) as f64 - g.get(r, c) as f64).abs();
            }
            if r + 1 < h {
                tv += (g.get(r + 1, c) as f64 - g.get(r, c) as f64).abs();
            }
        }
    }
    tv
}

#[test]
fn beta_mean_and_support() {
    let cfg = DegradationConfig::default();
    let mut rng = Rng::new(17);
    let n = 100_000;
    let mut total = 0.0;
    for _ in 0..n {
        let psi = sample_psi(&cfg, &mut rng).unwrap();
        assert!(psi.sigma_k > 0.0 && psi.sigma_k < 1.0);
        total += psi.sigma_k;
    }
    let mean = total / n as f64;
    assert!((0.49..=0.51).contains(&mean), "mean {mean}");
}

#[test]
fn half_pixel_kernel_taps() {
    let oracle: Vec<f64> = {
        let raw: Vec<f64> = (-2i32..=2).map(|t| (-(t * t) as f64 / 0.5).exp()).collect();
        let z: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / z).collect()
    };
    let k = gaussian_kernel(0.5);
    assert_eq!(k.len(), 5);
    for (a, b) in k.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-15);
    }
    let rounded: Vec<f64> = k.iter().map(|v| (v * 1e4).round() / 1e4).collect();
    assert_eq!(rounded, [0.0003, 0.1065, 0.7866, 0.1065, 0.0003]);
}

#[test]
fn blur_matches_direct_convolution() {
    let x = random_grid(8, 8, 3);
    for sigma in [0.5, 0.9, 2.5] {
        let psi = DegradationParams::new(sigma, 0.0).unwrap();
        let got = degrade(&x, &psi, &mut Rng::new(0)).unwrap();
        for (a, b) in got.data().iter().zip(conv_oracle(&x, sigma)) {
            assert!((*a as f64 - b).abs() < 1e-6, "sigma {sigma}: {a} vs {b}");
        }
    }
}

#[test]
fn noise_statistics() {
    let x = random_grid(256, 256, 5);
    let psi = DegradationParams::new(0.0, 0.05).unwrap();
    let y = degrade(&x, &psi, &mut Rng::new(1)).unwrap();
    let diff: Vec<f64> = x.data().iter().zip(y.data()).map(|(a, b)| *b as f64 - *a as f64).collect();
    let mean = diff.iter().sum::<f64>() / diff.len() as f64;
    let std = (diff.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (diff.len() - 1) as f64).sqrt();
    assert!((std / 0.05 - 1.0).abs() < 0.05, "std {std}");
}

#[test]
fn stochastic_draws() {
    let x = random_grid(16, 16, 2);
    let cfg = DegradationConfig::default();
    let run = |stream| {
        let mut rng = Rng::substream(9, stream);
        let psi = sample_psi(&cfg, &mut rng).unwrap();
        degrade(&x, &psi, &mut rng).unwrap()
    };
    assert_eq!(run(1), run(1));
    assert_ne!(run(1), run(2));

    let quiet = DegradationConfig {
        enable_noise: false,
        ..Default::default()
    };
    let a = sample_psi(&quiet, &mut Rng::substream(9, 1)).unwrap();
    let b = sample_psi(&quiet, &mut Rng::substream(9, 2)).unwrap();
    assert_ne!(a.sigma_k, b.sigma_k);
}

#[test]
fn delta_kernel_is_identity() {
    let x = random_grid(9, 7, 8);
    let y = degrade(&x, &DegradationParams::identity(), &mut Rng::new(0)).unwrap();
    assert_eq!(x, y);
}

proptest! {
    #[test]
    fn kernels_are_normalized_and_symmetric(sigma in 0.0f64..4.0) {
        let k = gaussian_kernel(sigma);
        prop_assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(k.len() % 2 == 1);
        for i in 0..k.len() {
            prop_assert_eq!(k[i], k[k.len() - 1 - i]);
        }
    }

    #[test]
    fn blur_keeps_mean_and_reduces_variation(h in 2usize..20, w in 2usize..20, sigma in 0.0f64..1.0, seed in any::<u64>()) {
        let x = random_grid(h, w, seed);
        let psi = DegradationParams::new(sigma, 0.0).unwrap();
        let y = degrade(&x, &psi, &mut Rng::new(0)).unwrap();
        prop_assert!((y.mean() - x.mean()).abs() < 1e-6);
        prop_assert!(total_variation(&y) <= total_variation(&x) + 1e-4);
    }

    #[test]
    fn constants_survive(v in -10.0f32..10.0, sigma in 0.0f64..3.0) {
        let g = RealGrid::filled(6, 9, v);
        let y = degrade(&g, &DegradationParams::new(sigma, 0.0).unwrap(), &mut Rng::new(0)).unwrap();
        for &o in y.data() {
            prop_assert!((o - v).abs() <= 1e-5 * v.abs().max(1.0));
        }
    }
}
