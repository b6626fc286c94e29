use super::{BinaryMask, PatchCoordinate, SlidePyramid};
use crate::error::{Error, Result};

pub const DEFAULT_MIN_TISSUE_FRACTION: f64 = 0.5;

/// Fraction of `coord`'s area covered by tissue cells of `mask`.
///
/// The patch may live on a different level than the mask; area outside the
/// level counts as background.
pub fn tissue_fraction(mask: &BinaryMask, coord: &PatchCoordinate) -> f64 {
    // scale from the patch level into mask-level pixels
    let scale = 2f64.powi(coord.level as i32 - mask.level as i32);
    let px0 = coord.x as f64 * scale;
    let py0 = coord.y as f64 * scale;
    let side = coord.size as f64 * scale;
    let (px1, py1) = (px0 + side, py0 + side);
    let cx0 = px0.max(0.0);
    let cy0 = py0.max(0.0);
    let cx1 = px1.min(mask.level_width as f64);
    let cy1 = py1.min(mask.level_height as f64);
    if cx1 <= cx0 || cy1 <= cy0 {
        return 0.0;
    }
    let stride = mask.stride as f64;
    let col0 = (cx0 / stride).floor() as u32;
    let col1 = ((cx1 / stride).ceil() as u32).min(mask.cols);
    let row0 = (cy0 / stride).floor() as u32;
    let row1 = ((cy1 / stride).ceil() as u32).min(mask.rows);
    let mut covered = 0.0;
    for row in row0..row1 {
        for col in col0..col1 {
            if !mask.get(col, row) {
                continue;
            }
            let (ex0, ey0, ex1, ey1) = mask.cell_extent(col, row);
            let ox = (cx1.min(ex1 as f64) - cx0.max(ex0 as f64)).max(0.0);
            let oy = (cy1.min(ey1 as f64) - cy0.max(ey0 as f64)).max(0.0);
            covered += ox * oy;
        }
    }
    covered / (side * side)
}

/// Non-overlapping `patch_size` grid on the level matching `target_mpp`,
/// keeping patches whose tissue fraction reaches `min_tissue_fraction`.
/// Output is row-major.
pub fn grid_patches(
    pyramid: &SlidePyramid,
    target_mpp: f64,
    patch_size: u32,
    mask: &BinaryMask,
    min_tissue_fraction: f64,
) -> Result<Vec<PatchCoordinate>> {
    let level = pyramid
        .level_for_mpp(target_mpp)
        .ok_or_else(|| Error::invalid(format!("no pyramid level at {target_mpp} µm/px")))?;
    if patch_size == 0 {
        return Err(Error::invalid("patch size must be positive"));
    }
    if mask.level >= pyramid.level_count() {
        return Err(Error::invalid(format!("mask level {} not in pyramid", mask.level)));
    }
    let lvl = pyramid.level(level)?;
    let mut out = Vec::new();
    for row in 0..lvl.height.div_ceil(patch_size) {
        for col in 0..lvl.width.div_ceil(patch_size) {
            let coord = PatchCoordinate::new(level, (col * patch_size) as i64, (row * patch_size) as i64, patch_size);
            if tissue_fraction(mask, &coord) >= min_tissue_fraction {
                out.push(coord);
            }
        }
    }
    Ok(out)
}
