//! Left-left and right-right hemifacial composites.

use crate::error::{Error, Result};
use crate::geometry::{FaceChip, MIN_HALF_WIDTH};
use crate::image::GrayImage;

#[derive(Debug, Clone, PartialEq)]
pub struct CompositePair {
    /// Image-left half followed by its mirror.
    pub ll: GrayImage,
    /// Mirror of the image-right half followed by that half.
    pub rr: GrayImage,
    pub split_col: usize,
}

/// Builds both composites of an aligned chip, splitting at its rounded midline.
pub fn make_composites(chip: &FaceChip) -> Result<CompositePair> {
    let split = chip.split_col();
    let width = chip.image.width();
    let half = split.min(width.saturating_sub(split));
    if half < MIN_HALF_WIDTH {
        return Err(Error::ChipTooAsymmetric {
            half_width: half,
            min: MIN_HALF_WIDTH,
        });
    }
    split_composites(&chip.image, split)
}

/// Composites of `image` split before column `split_col`. Both halves are cut
/// to the narrower side's width, so the outputs are `2 × half` wide.
pub fn split_composites(image: &GrayImage, split_col: usize) -> Result<CompositePair> {
    let (width, height) = image.dimensions();
    let half = split_col.min(width.saturating_sub(split_col));
    if half == 0 {
        return Err(Error::ChipTooAsymmetric {
            half_width: 0,
            min: 1,
        });
    }
    let out_w = 2 * half;
    let mut ll = Vec::with_capacity(out_w * height);
    let mut rr = Vec::with_capacity(out_w * height);
    for y in 0..height {
        let row = image.row(y);
        let left = &row[split_col - half..split_col];
        let right = &row[split_col..split_col + half];
        ll.extend_from_slice(left);
        ll.extend(left.iter().rev());
        rr.extend(right.iter().rev());
        rr.extend_from_slice(right);
    }
    Ok(CompositePair {
        ll: GrayImage::new(out_w, height, ll)?,
        rr: GrayImage::new(out_w, height, rr)?,
        split_col,
    })
}
