//! Structural similarity between two equally sized grayscale images.
//!
//! Local statistics use a normalized Gaussian window evaluated only where it
//! fits entirely inside the image. The separable filter runs row-parallel;
//! every output value is computed with a fixed summation order, so the map
//! does not depend on how the rows were scheduled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::par::{map_range, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    /// Side of the square window; odd.
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "SSIM window must be odd and at least 3, got {}",
                self.window
            )));
        }
        let positive = [
            ("sigma", self.sigma),
            ("k1", self.k1),
            ("k2", self.k2),
            ("dynamic range", self.dynamic_range),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!(
                    "SSIM {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    /// Normalized 1-D Gaussian taps; the window is their outer product.
    pub fn kernel(&self) -> Vec<f64> {
        let r = (self.window / 2) as f64;
        let taps: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - r;
                (-d * d / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.into_iter().map(|t| t / sum).collect()
    }

    /// Full `window × window` weights, row-major.
    pub fn window_weights(&self) -> Vec<f64> {
        let k = self.kernel();
        k.iter()
            .flat_map(|wy| k.iter().map(move |wx| wy * wx))
            .collect()
    }
}

/// Local SSIM values at every position where the window fits.
#[derive(Debug, Clone, PartialEq)]
pub struct SsimMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl SsimMap {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Mean in row-major order.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

fn check_inputs(a: &GrayImage, b: &GrayImage, p: &SsimParams) -> Result<()> {
    p.validate()?;
    if a.dimensions() != b.dimensions() {
        return Err(Error::DimensionMismatch {
            a: a.dimensions(),
            b: b.dimensions(),
        });
    }
    let (w, h) = a.dimensions();
    if w < p.window || h < p.window {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            window: p.window,
        });
    }
    Ok(())
}

/// The local similarity formula given Gaussian-weighted moments.
#[inline]
pub(crate) fn local_score(
    mu_a: f64,
    mu_b: f64,
    e_aa: f64,
    e_bb: f64,
    e_ab: f64,
    c1: f64,
    c2: f64,
) -> f64 {
    let var_a = e_aa - mu_a * mu_a;
    let var_b = e_bb - mu_b * mu_b;
    let cov = e_ab - mu_a * mu_b;
    let num = (2.0 * (mu_a * mu_b) + c1) * (2.0 * cov + c2);
    let den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
    num / den
}

pub fn ssim_map(a: &GrayImage, b: &GrayImage, p: &SsimParams) -> Result<SsimMap> {
    ssim_map_with(a, b, p, Execution::default())
}

pub fn ssim_map_with(
    a: &GrayImage,
    b: &GrayImage,
    p: &SsimParams,
    exec: Execution,
) -> Result<SsimMap> {
    check_inputs(a, b, p)?;
    let (w, h) = a.dimensions();
    let ws = p.window;
    let (ow, oh) = (w - ws + 1, h - ws + 1);
    let g = p.kernel();
    let (c1, c2) = (p.c1(), p.c2());

    // Horizontal pass: per input row, filtered a, b, a², b², ab.
    let horizontal: Vec<[Vec<f64>; 5]> = map_range(h, exec, |y| {
        let (ra, rb) = (a.row(y), b.row(y));
        let mut out: [Vec<f64>; 5] = std::array::from_fn(|_| Vec::with_capacity(ow));
        for x in 0..ow {
            let mut s = [0.0f64; 5];
            for (k, &gk) in g.iter().enumerate() {
                let (va, vb) = (ra[x + k], rb[x + k]);
                s[0] += gk * va;
                s[1] += gk * vb;
                s[2] += gk * (va * va);
                s[3] += gk * (vb * vb);
                s[4] += gk * (va * vb);
            }
            for (o, v) in out.iter_mut().zip(s) {
                o.push(v);
            }
        }
        out
    });

    let rows: Vec<Vec<f64>> = map_range(oh, exec, |oy| {
        (0..ow)
            .map(|x| {
                let mut s = [0.0f64; 5];
                for (k, &gk) in g.iter().enumerate() {
                    let hr = &horizontal[oy + k];
                    for (acc, plane) in s.iter_mut().zip(hr.iter()) {
                        *acc += gk * plane[x];
                    }
                }
                local_score(s[0], s[1], s[2], s[3], s[4], c1, c2)
            })
            .collect()
    });

    Ok(SsimMap {
        width: ow,
        height: oh,
        values: rows.into_iter().flatten().collect(),
    })
}

/// Mean local SSIM without clamping, in `[-1, 1]`.
pub fn mean_ssim(a: &GrayImage, b: &GrayImage, p: &SsimParams) -> Result<f64> {
    Ok(ssim_map(a, b, p)?.mean())
}

/// Similarity score in `[0, 1]`: the mean local SSIM, clamped below at 0.
///
/// Negative scores are reserved for frames without a usable face.
pub fn ssid(a: &GrayImage, b: &GrayImage, p: &SsimParams) -> Result<f64> {
    ssid_with(a, b, p, Execution::default())
}

pub fn ssid_with(a: &GrayImage, b: &GrayImage, p: &SsimParams, exec: Execution) -> Result<f64> {
    Ok(ssim_map_with(a, b, p, exec)?.mean().max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct per-window evaluation with independently built 2-D weights.
    pub(super) fn naive_map(a: &GrayImage, b: &GrayImage, p: &SsimParams) -> Vec<f64> {
        let ws = p.window;
        let r = (ws / 2) as f64;
        let mut weights = vec![0.0; ws * ws];
        for j in 0..ws {
            for i in 0..ws {
                let (dx, dy) = (i as f64 - r, j as f64 - r);
                weights[j * ws + i] = (-(dx * dx + dy * dy) / (2.0 * p.sigma * p.sigma)).exp();
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let (c1, c2) = (
            (p.k1 * p.dynamic_range).powi(2),
            (p.k2 * p.dynamic_range).powi(2),
        );
        let mut out = Vec::new();
        for y in 0..=a.height() - ws {
            for x in 0..=a.width() - ws {
                let (mut ma, mut mb) = (0.0, 0.0);
                for j in 0..ws {
                    for i in 0..ws {
                        let w = weights[j * ws + i];
                        ma += w * a.get(x + i, y + j);
                        mb += w * b.get(x + i, y + j);
                    }
                }
                let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                for j in 0..ws {
                    for i in 0..ws {
                        let w = weights[j * ws + i];
                        let da = a.get(x + i, y + j) - ma;
                        let db = b.get(x + i, y + j) - mb;
                        va += w * da * da;
                        vb += w * db * db;
                        cov += w * da * db;
                    }
                }
                out.push(
                    ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                        / ((ma * ma + mb * mb + c1) * (va + vb + c2)),
                );
            }
        }
        out
    }

    fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |_, _| rng.random::<f64>())
    }

    #[test]
    fn params_and_window() {
        let p = SsimParams::default();
        let w = p.window_weights();
        assert_eq!(w.len(), 121);
        assert!(w.iter().all(|&v| v > 0.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.c1() > 0.0 && p.c2() > 0.0);
        assert!((p.c1() - 1e-4).abs() < 1e-18 && (p.c2() - 9e-4).abs() < 1e-18);
        assert!(SsimParams { window: 10, ..p }.validate().is_err());
        assert!(SsimParams { sigma: 0.0, ..p }.validate().is_err());
    }

    #[test]
    fn identical_images_score_exactly_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_image(&mut rng, 30, 25);
        let map = ssim_map(&a, &a, &SsimParams::default()).unwrap();
        assert_eq!((map.width, map.height), (20, 15));
        assert!(map.values.iter().all(|&v| v == 1.0));
        assert_eq!(ssid(&a, &a, &SsimParams::default()).unwrap(), 1.0);
        let flat = GrayImage::filled(16, 16, 0.4);
        assert_eq!(ssid(&flat, &flat, &SsimParams::default()).unwrap(), 1.0);
    }

    #[test]
    fn constant_images_reduce_to_luminance_term() {
        let p = SsimParams::default();
        let a = GrayImage::filled(20, 20, 0.2);
        let b = GrayImage::filled(20, 20, 0.8);
        let expected = (2.0 * 0.16 + p.c1()) / (0.04 + 0.64 + p.c1());
        let map = ssim_map(&a, &b, &p).unwrap();
        for v in &map.values {
            assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
        }
    }

    #[test]
    fn matches_naive_reference() {
        let p = SsimParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let a = random_image(&mut rng, 32, 32);
        let b = random_image(&mut rng, 32, 32);
        let fast = ssim_map(&a, &b, &p).unwrap();
        let slow = naive_map(&a, &b, &p);
        assert_eq!(fast.values.len(), slow.len());
        for (f, s) in fast.values.iter().zip(&slow) {
            assert!((f - s).abs() < 1e-9);
        }
    }

    #[test]
    fn negative_correlation_is_clamped() {
        let p = SsimParams::default();
        let a = GrayImage::from_fn(24, 24, |x, y| if (x + y) % 2 == 0 { 0.9 } else { 0.1 });
        let neg = GrayImage::from_fn(24, 24, |x, y| 1.0 - a.get(x, y));
        let raw = mean_ssim(&a, &neg, &p).unwrap();
        assert!(raw < 0.0 && raw >= -1.0, "{raw}");
        assert_eq!(ssid(&a, &neg, &p).unwrap(), 0.0);
    }

    #[test]
    fn shape_errors() {
        let p = SsimParams::default();
        let a = GrayImage::filled(20, 20, 0.5);
        let b = GrayImage::filled(20, 21, 0.5);
        assert!(matches!(
            ssim_map(&a, &b, &p),
            Err(Error::DimensionMismatch { .. })
        ));
        let tiny = GrayImage::filled(10, 30, 0.5);
        assert!(matches!(
            ssim_map(&tiny, &tiny, &p),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let p = SsimParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_image(&mut rng, 70, 50);
        let b = random_image(&mut rng, 70, 50);
        let s = ssim_map_with(&a, &b, &p, Execution::Sequential).unwrap();
        let q = ssim_map_with(&a, &b, &p, Execution::Parallel).unwrap();
        assert_eq!(s, q);
    }

    #[test]
    fn shifting_lowers_the_score() {
        let p = SsimParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base = random_image(&mut rng, 46, 40);
        let a = base.crop(3, 0, 40, 40).unwrap();
        let shifted = base.crop(0, 0, 40, 40).unwrap();
        assert!(ssid(&a, &shifted, &p).unwrap() < ssid(&a, &a, &p).unwrap());
    }
}
