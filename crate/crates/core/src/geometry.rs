//! Upright face chips: rotate about the eye midpoint, crop the padded
//! landmark box, and force an even width.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::landmarks::{eye_centers, midline_x, roll_angle, Landmarks68, Point, TiltDecision};

/// Smallest chip side accepted for compositing.
pub const MIN_CHIP_SIDE: usize = 16;

/// Columns kept on each side of the split column at minimum.
pub const MIN_HALF_WIDTH: usize = 4;

// Tolerance for snapping crop edges that land within rounding noise of an integer.
const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropParams {
    /// Padding added to each side of the landmark box, as a fraction of its size.
    pub padding: f64,
}

impl Default for CropParams {
    fn default() -> Self {
        Self { padding: 0.1 }
    }
}

impl CropParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.padding) {
            return Err(Error::Parameter(format!(
                "crop padding must be in [0, 1], got {}",
                self.padding
            )));
        }
        Ok(())
    }
}

/// Aligned, cropped, even-width face region.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceChip {
    pub image: GrayImage,
    /// Landmarks in chip coordinates.
    pub landmarks: Landmarks68,
    pub midline_x: f64,
    /// Roll of the face in the source frame, degrees.
    pub source_roll: f64,
}

impl FaceChip {
    /// Split column used for compositing: the rounded midline, kept at least
    /// [`MIN_HALF_WIDTH`] columns from either edge.
    pub fn split_col(&self) -> usize {
        split_column(self.midline_x, self.image.width())
    }

    /// The chip of the left-right mirrored face.
    pub fn mirror(&self) -> Self {
        let w = self.image.width() as f64;
        Self {
            image: self.image.flip_horizontal(),
            landmarks: self.landmarks.mirror_horizontal(w),
            midline_x: w - self.midline_x,
            source_roll: -self.source_roll,
        }
    }
}

pub(crate) fn split_column(midline: f64, width: usize) -> usize {
    let lo = MIN_HALF_WIDTH as f64;
    let hi = width.saturating_sub(MIN_HALF_WIDTH) as f64;
    if hi < lo {
        return width / 2;
    }
    midline.round().clamp(lo, hi) as usize
}

/// Rotates `p` about `center` by `angle` degrees (standard planar rotation,
/// counter-clockwise for a y-up frame).
pub fn rotate_point(p: Point, center: Point, angle: f64) -> Point {
    let (s, c) = angle.to_radians().sin_cos();
    let dx = p.x - center.x;
    let dy = p.y - center.y;
    Point::new(center.x + c * dx - s * dy, center.y + s * dx + c * dy)
}

/// Pixel range `[start, end)` covering `[lo - pad, hi + pad]`, clipped to `[0, limit)`.
fn padded_span(lo: f64, hi: f64, padding: f64, limit: usize) -> (usize, usize) {
    let pad = (hi - lo) * padding;
    let start = ((lo - pad) + EDGE_EPS).floor().max(0.0);
    let end = ((hi + pad) - EDGE_EPS).ceil().min(limit as f64);
    if end <= start {
        (0, 0)
    } else {
        (start as usize, end as usize)
    }
}

/// Produces an upright chip for a face the tilt gate accepted.
///
/// The frame is rotated by `-roll` about the eye midpoint with bilinear
/// sampling (zero outside the frame), cropped to the rotated landmark box
/// grown by `params.padding` per side, and trimmed to an even width.
pub fn align_and_crop(
    frame: &GrayImage,
    lm: &Landmarks68,
    decision: TiltDecision,
    params: &CropParams,
) -> Result<FaceChip> {
    let (angle, source_roll) = match decision {
        TiltDecision::Discard(r) => {
            return Err(Error::Contract(format!(
                "align_and_crop called for a discarded face (roll {r}°)"
            )))
        }
        TiltDecision::ProcessAsIs => (0.0, roll_angle(lm)?),
        TiltDecision::AlignThenProcess(r) => (r, r),
    };
    let (left, right) = eye_centers(lm);
    let center = Point::new((left.x + right.x) / 2.0, (left.y + right.y) / 2.0);

    let upright = if angle == 0.0 {
        lm.clone()
    } else {
        lm.map(|p| rotate_point(p, center, -angle))?
    };

    let (lo, hi) = upright.bounding_box();
    let (x0, x1) = padded_span(lo.x, hi.x, params.padding, frame.width());
    let (y0, y1) = padded_span(lo.y, hi.y, params.padding, frame.height());
    if x1 == 0 || y1 == 0 {
        return Err(Error::DegenerateGeometry(
            "face box lies entirely outside the frame".into(),
        ));
    }
    let (mut w, h) = (x1 - x0, y1 - y0);
    if w < MIN_CHIP_SIDE || h < MIN_CHIP_SIDE {
        return Err(Error::DegenerateGeometry(format!(
            "face chip {w}x{h} smaller than {MIN_CHIP_SIDE}x{MIN_CHIP_SIDE}"
        )));
    }

    let mut offset_x = x0 as f64;
    let mut midline = midline_x(&upright) - offset_x;
    let mut left_col = x0;
    if w % 2 == 1 {
        // Trim the column on the wider side of the split so both halves keep
        // their full usable width.
        let split = split_column(midline, w);
        if split > w - split {
            left_col += 1;
            offset_x += 1.0;
            midline -= 1.0;
        }
        w -= 1;
        if w < MIN_CHIP_SIDE {
            return Err(Error::DegenerateGeometry(format!(
                "face chip width {w} smaller than {MIN_CHIP_SIDE}"
            )));
        }
    }

    let image = if angle == 0.0 {
        frame.crop(left_col, y0, w, h)?
    } else {
        GrayImage::from_fn(w, h, |i, j| {
            let q = Point::new((left_col + i) as f64 + 0.5, (y0 + j) as f64 + 0.5);
            let s = rotate_point(q, center, angle);
            frame.sample_bilinear(s.x, s.y)
        })
    };
    let offset_y = y0 as f64;
    let landmarks = upright.map(|p| Point::new(p.x - offset_x, p.y - offset_y))?;
    if !(midline > 0.0 && midline < w as f64) {
        return Err(Error::DegenerateGeometry(format!(
            "midline {midline:.3} outside the {w}-wide chip"
        )));
    }
    Ok(FaceChip {
        image,
        landmarks,
        midline_x: midline,
        source_roll,
    })
}
