//! GRD1 grid files and 8-bit PNG previews.
//!
//! GRD1: `b"GRD1"`, height and width as little-endian `u32`, then
//! `height * width` little-endian `f32` values in row-major order.

use std::fs::{self, File};
use std::io::{BufWriter, ErrorKind};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::RealGrid;

pub const GRD_MAGIC: &[u8; 4] = b"GRD1";
const HEADER: usize = 12;

pub fn encode_grid(g: &RealGrid) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(HEADER + 4 * g.len());
    bytes.extend_from_slice(GRD_MAGIC);
    bytes.extend_from_slice(&(g.height() as u32).to_le_bytes());
    bytes.extend_from_slice(&(g.width() as u32).to_le_bytes());
    for v in g.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

pub fn decode_grid(bytes: &[u8], path: &Path) -> Result<RealGrid> {
    if bytes.len() < 4 || &bytes[..4] != GRD_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            found: bytes[..bytes.len().min(4)].to_vec(),
            expected: "GRD1",
        });
    }
    if bytes.len() < HEADER {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: HEADER,
            found: bytes.len(),
        });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("four bytes")) as usize;
    let (height, width) = (word(4), word(8));
    let expected = HEADER + 4 * height * width;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected,
            found: bytes.len(),
        });
    }
    let data = bytes[HEADER..expected]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("four bytes")))
        .collect();
    RealGrid::new(height, width, data)
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<RealGrid> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    decode_grid(&bytes, path)
}

pub fn save_grid(g: &RealGrid, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_grid(g))?;
    Ok(())
}

/// Linear min-max map to `0..=255`; a constant grid maps to 128.
pub fn to_gray8(g: &RealGrid) -> Vec<u8> {
    let (lo, hi) = g.min_max();
    to_gray8_range(g, lo as f64, hi as f64)
}

/// Linear map of `[lo, hi]` to `0..=255` with clamping.
pub fn to_gray8_range(g: &RealGrid, lo: f64, hi: f64) -> Vec<u8> {
    if hi <= lo {
        return vec![128; g.len()];
    }
    g.data()
        .iter()
        .map(|&v| (255.0 * ((v as f64 - lo) / (hi - lo)).clamp(0.0, 1.0)).round() as u8)
        .collect()
}

pub fn write_gray_png(pixels: &[u8], height: usize, width: usize, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(|e| Error::Png(e.to_string()))?;
    writer.write_image_data(pixels).map_err(|e| Error::Png(e.to_string()))?;
    writer.finish().map_err(|e| Error::Png(e.to_string()))
}

pub fn save_png_preview(g: &RealGrid, path: impl AsRef<Path>) -> Result<()> {
    write_gray_png(&to_gray8(g), g.height(), g.width(), path)
}
