use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::grid::{ComplexImage, KGrid};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unitary 2-D DFT of `data` (row-major `h x w`), with the centered
/// convention: `ifftshift` on the way in, `fftshift` on the way out.
fn centered(data: &[Complex64], h: usize, w: usize, inverse: bool) -> Vec<Complex64> {
    let (rh, rw) = (h / 2, w / 2);
    // ifftshift: index h/2 moves to 0
    let mut buf = vec![Complex64::new(0.0, 0.0); h * w];
    for r in 0..h {
        let sr = (r + rh) % h;
        for c in 0..w {
            buf[r * w + c] = data[sr * w + (c + rw) % w];
        }
    }
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let (row_fft, col_fft) = if inverse {
            (p.plan_fft_inverse(w), p.plan_fft_inverse(h))
        } else {
            (p.plan_fft_forward(w), p.plan_fft_forward(h))
        };
        row_fft.process(&mut buf);
        let mut col = vec![Complex64::new(0.0, 0.0); h];
        for c in 0..w {
            for r in 0..h {
                col[r] = buf[r * w + c];
            }
            col_fft.process(&mut col);
            for r in 0..h {
                buf[r * w + c] = col[r];
            }
        }
    });
    let scale = 1.0 / ((h * w) as f64).sqrt();
    // fftshift: index 0 moves to h/2
    let mut out = vec![Complex64::new(0.0, 0.0); h * w];
    for r in 0..h {
        let dr = (r + rh) % h;
        for c in 0..w {
            out[dr * w + (c + rw) % w] = buf[r * w + c] * scale;
        }
    }
    out
}

/// Unitary centered 2-D Fourier transform; DC lands at `(h/2, w/2)`.
pub fn fft2c(img: &ComplexImage) -> KGrid {
    let (h, w) = img.dims();
    KGrid::from_parts(h, w, centered(img.data(), h, w, false))
}

/// Inverse of [`fft2c`].
pub fn ifft2c(k: &KGrid) -> ComplexImage {
    let (h, w) = k.dims();
    ComplexImage::from_parts(h, w, centered(k.data(), h, w, true))
}
