//! Helpers shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

/// Centered unitary DFT evaluated term by term.
pub fn dft_oracle(x: &[Complex64], h: usize, w: usize, inverse: bool) -> Vec<Complex64> {
    let sign = if inverse { 1.0 } else { -1.0 };
    let (ch, cw) = ((h / 2) as f64, (w / 2) as f64);
    let mut out = vec![Complex64::new(0.0, 0.0); h * w];
    for ku in 0..h {
        for kv in 0..w {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..h {
                for c in 0..w {
                    let phase = sign
                        * 2.0
                        * PI
                        * ((ku as f64 - ch) * (r as f64 - ch) / h as f64 + (kv as f64 - cw) * (c as f64 - cw) / w as f64);
                    acc += x[r * w + c] * Complex64::from_polar(1.0, phase);
                }
            }
            out[ku * w + kv] = acc / ((h * w) as f64).sqrt();
        }
    }
    out
}

