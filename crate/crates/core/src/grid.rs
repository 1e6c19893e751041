//! Image and k-space containers.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

/// Real-valued 2-D image, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RealGrid {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl RealGrid {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Shape(format!("grid dims must be positive, got {height}x{width}")));
        }
        if data.len() != height * width {
            return Err(Error::Shape(format!(
                "{height}x{width} grid needs {} values, got {}",
                height * width,
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { height, width, data })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f32) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_f64(height: usize, width: usize, data: &[f64]) -> Result<Self> {
        Self::new(height, width, data.iter().map(|&v| v as f32).collect())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.width + col]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.len() as f64
    }

    /// Population standard deviation.
    pub fn std(&self) -> f64 {
        let mean = self.mean();
        let var = self.data.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / self.len() as f64;
        var.sqrt()
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn ensure_same_dims(&self, other: &RealGrid) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        Ok(())
    }

    /// Reflect-pads on the bottom and right to the given size.
    pub fn pad_reflect(&self, height: usize, width: usize) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            let sr = reflect_index(r as isize, self.height);
            for c in 0..width {
                data.push(self.data[sr * self.width + reflect_index(c as isize, self.width)]);
            }
        }
        Self { height, width, data }
    }

    /// Top-left `height x width` window.
    pub fn crop(&self, height: usize, width: usize) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            data.extend_from_slice(&self.data[r * self.width..r * self.width + width]);
        }
        Self { height, width, data }
    }
}

/// Half-sample symmetric reflection (`d c b a | a b c d | d c b a`), folded
/// as often as needed.
pub fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Divides by the population standard deviation; returns the grid and the
/// scale that undoes it.
pub fn normalize_by_std(g: &RealGrid) -> Result<(RealGrid, f64)> {
    let std = g.std();
    if std <= 0.0 || !std.is_finite() {
        return Err(Error::Degenerate("grid has zero variance".into()));
    }
    let data: Vec<f64> = g.data.iter().map(|&v| v as f64 / std).collect();
    Ok((RealGrid::from_f64(g.height, g.width, &data)?, std))
}

macro_rules! complex_grid {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name {
            height: usize,
            width: usize,
            data: Vec<Complex64>,
        }

        impl $name {
            pub fn new(height: usize, width: usize, data: Vec<Complex64>) -> Result<Self> {
                if height == 0 || width == 0 || data.len() != height * width {
                    return Err(Error::Shape(format!(
                        "{height}x{width} complex grid with {} values",
                        data.len()
                    )));
                }
                if let Some(index) = data.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
                    return Err(Error::NonFinite { index });
                }
                Ok(Self { height, width, data })
            }

            pub fn zeros(height: usize, width: usize) -> Self {
                Self { height, width, data: vec![Complex64::new(0.0, 0.0); height * width] }
            }

            pub fn height(&self) -> usize {
                self.height
            }

            pub fn width(&self) -> usize {
                self.width
            }

            pub fn dims(&self) -> (usize, usize) {
                (self.height, self.width)
            }

            pub fn data(&self) -> &[Complex64] {
                &self.data
            }

            pub fn data_mut(&mut self) -> &mut [Complex64] {
                &mut self.data
            }

            pub fn get(&self, row: usize, col: usize) -> Complex64 {
                self.data[row * self.width + col]
            }

            pub fn energy(&self) -> f64 {
                self.data.iter().map(|v| v.norm_sqr()).sum()
            }

            pub(crate) fn from_parts(height: usize, width: usize, data: Vec<Complex64>) -> Self {
                debug_assert_eq!(data.len(), height * width);
                Self { height, width, data }
            }

            #[allow(dead_code)]
            pub(crate) fn into_data(self) -> Vec<Complex64> {
                self.data
            }
        }
    };
}

complex_grid!(
    /// Complex image-domain grid.
    ComplexImage
);

complex_grid!(
    /// Centered k-space: DC at `(height / 2, width / 2)`. Columns index the
    /// phase-encoding direction, rows the frequency-encoding direction.
    KGrid
);

impl ComplexImage {
    pub fn from_real(g: &RealGrid) -> Self {
        Self::from_parts(
            g.height(),
            g.width(),
            g.data().iter().map(|&v| Complex64::new(v as f64, 0.0)).collect(),
        )
    }

    /// Elementwise modulus.
    pub fn magnitude(&self) -> RealGrid {
        let data: Vec<f32> = self.data.iter().map(|v| v.norm() as f32).collect();
        RealGrid {
            height: self.height,
            width: self.width,
            data,
        }
    }
}
