//! Grayscale rasters and colour-to-luminance conversion.

use crate::error::{Error, Result};

/// Rec. 601 luma weights for (red, green, blue), in thousandths.
pub const LUMA_WEIGHTS: [f64; 3] = [299.0, 587.0, 114.0];

/// Luminance of an RGB triple. Channels are clamped to `[0, 1]` first.
pub fn to_gray(red: f64, green: f64, blue: f64) -> f64 {
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let y = wr * red.clamp(0.0, 1.0) + wg * green.clamp(0.0, 1.0) + wb * blue.clamp(0.0, 1.0);
    (y / 1000.0).clamp(0.0, 1.0)
}

/// Row-major luminance raster with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Parameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Parameter(format!(
                "image data has {} values, expected {}",
                data.len(),
                width * height
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Parameter(format!(
                "pixel value {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// A `width`×`height` image filled with `value` (clamped to `[0, 1]`).
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value.clamp(0.0, 1.0); width * height],
        }
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel. Results are clamped.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Copies the rectangle `[x0, x0 + width) × [y0, y0 + height)`.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || x0 + width > self.width || y0 + height > self.height {
            return Err(Error::Parameter(format!(
                "crop {width}x{height}+{x0}+{y0} outside {}x{} image",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(width * height);
        for y in y0..y0 + height {
            data.extend_from_slice(&self.row(y)[x0..x0 + width]);
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Left-right mirror image.
    pub fn flip_horizontal(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.height {
            data.extend(self.row(y).iter().rev());
        }
        Self {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Bilinear sample at continuous coordinates where pixel `(i, j)` has
    /// its centre at `(i + 0.5, j + 0.5)`. Neighbours outside the raster read as 0.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let u = x - 0.5;
        let v = y - 0.5;
        let u0 = u.floor();
        let v0 = v.floor();
        let fu = u - u0;
        let fv = v - v0;
        let (iu, iv) = (u0 as i64, v0 as i64);
        let px = |i: i64, j: i64| -> f64 {
            if i < 0 || j < 0 || i >= self.width as i64 || j >= self.height as i64 {
                0.0
            } else {
                self.get(i as usize, j as usize)
            }
        };
        let top = px(iu, iv) * (1.0 - fu) + px(iu + 1, iv) * fu;
        let bottom = px(iu, iv + 1) * (1.0 - fu) + px(iu + 1, iv + 1) * fu;
        (top * (1.0 - fv) + bottom * fv).clamp(0.0, 1.0)
    }

    /// Quantizes to 8-bit luminance, rounding to nearest.
    pub fn to_luma8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    /// Inverse of [`GrayImage::to_luma8`]: each byte maps to `byte / 255`.
    pub fn from_luma8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            bytes.iter().map(|&b| f64::from(b) / 255.0).collect(),
        )
    }
}
