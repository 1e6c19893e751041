use std::path::Path;

use crate::error::Result;
use crate::grid::RealGrid;
use crate::io::{to_gray8_range, write_gray_png};

const GAP: usize = 2;

/// Side-by-side grayscale strip. Images share the reference's intensity
/// window; the trailing difference tile (last image minus reference) spans
/// +-10% of the reference maximum.
pub fn save_panel(images: &[&RealGrid], reference: &RealGrid, path: impl AsRef<Path>) -> Result<()> {
    let (h, w) = reference.dims();
    let (lo, hi) = reference.min_max();
    let mut tiles: Vec<Vec<u8>> = Vec::new();
    for img in images.iter().copied().chain(std::iter::once(reference)) {
        reference.ensure_same_dims(img)?;
        tiles.push(to_gray8_range(img, lo as f64, hi as f64));
    }
    let last = images.last().copied().unwrap_or(reference);
    let diff = RealGrid::new(h, w, last.data().iter().zip(reference.data()).map(|(a, b)| a - b).collect())?;
    let span = 0.1 * hi.abs().max(f32::MIN_POSITIVE) as f64;
    tiles.push(to_gray8_range(&diff, -span, span));

    let total_w = tiles.len() * w + (tiles.len() - 1) * GAP;
    let mut pixels = vec![255u8; h * total_w];
    for (t, tile) in tiles.iter().enumerate() {
        let x0 = t * (w + GAP);
        for r in 0..h {
            pixels[r * total_w + x0..r * total_w + x0 + w].copy_from_slice(&tile[r * w..(r + 1) * w]);
        }
    }
    write_gray_png(&pixels, h, total_w, path)
}
