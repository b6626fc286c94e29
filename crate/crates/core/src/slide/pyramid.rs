use serde::{Deserialize, Serialize};

use super::{Patch, PatchCoordinate, PatchOrigin, RgbRaster};
use crate::error::{Error, Result};

/// Reference labels carried over from the case manifest.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtype: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isup_grade: Option<u8>,
}

/// One resolution of the pyramid, stored as a dense row-major tile grid.
/// Edge tiles are zero-padded to the full tile size.
#[derive(Clone)]
pub struct Level {
    pub(crate) index: usize,
    pub(crate) width: u32,
    pub(crate) height: u32,
    pub(crate) tile_size: u32,
    pub(crate) tiles: Vec<Box<[u8]>>,
}

impl std::fmt::Debug for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Level")
            .field("index", &self.index)
            .field("width", &self.width)
            .field("height", &self.height)
            .field("tiles", &self.tiles.len())
            .finish()
    }
}

impl Level {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn tiles_x(&self) -> u32 {
        self.width.div_ceil(self.tile_size)
    }

    pub fn tiles_y(&self) -> u32 {
        self.height.div_ceil(self.tile_size)
    }

    pub fn tile(&self, col: u32, row: u32) -> &[u8] {
        &self.tiles[(row * self.tiles_x() + col) as usize]
    }

    pub(crate) fn from_raster(index: usize, raster: &RgbRaster, tile_size: u32) -> Level {
        let (w, h) = (raster.width(), raster.height());
        let tx = w.div_ceil(tile_size);
        let ty = h.div_ceil(tile_size);
        let ts = tile_size as usize;
        let mut tiles = Vec::with_capacity((tx * ty) as usize);
        let src = raster.data();
        for row in 0..ty {
            for col in 0..tx {
                let mut tile = vec![0u8; ts * ts * 3].into_boxed_slice();
                let x0 = col * tile_size;
                let y0 = row * tile_size;
                let cw = (w - x0).min(tile_size) as usize;
                let ch = (h - y0).min(tile_size);
                for dy in 0..ch {
                    let s = ((y0 + dy) as usize * w as usize + x0 as usize) * 3;
                    let d = dy as usize * ts * 3;
                    tile[d..d + cw * 3].copy_from_slice(&src[s..s + cw * 3]);
                }
                tiles.push(tile);
            }
        }
        Level { index, width: w, height: h, tile_size, tiles }
    }

    /// Whole level as one flat raster (no padding).
    pub fn to_raster(&self) -> RgbRaster {
        let mut data = vec![0u8; self.width as usize * self.height as usize * 3];
        self.copy_rect(0, 0, self.width, self.height, &mut data, self.width as usize);
        RgbRaster::new(self.width, self.height, data).expect("level raster size")
    }

    /// Copies the in-bounds rectangle `[x, x+w) × [y, y+h)` into `dst`, a
    /// buffer with `dst_stride` pixels per row positioned at (0, 0) = (x, y).
    fn copy_rect(&self, x: u32, y: u32, w: u32, h: u32, dst: &mut [u8], dst_stride: usize) {
        let ts = self.tile_size;
        let (x1, y1) = (x + w, y + h);
        for row in y / ts..y1.div_ceil(ts) {
            let ty0 = row * ts;
            let ry0 = y.max(ty0);
            let ry1 = y1.min(ty0 + ts);
            for col in x / ts..x1.div_ceil(ts) {
                let tx0 = col * ts;
                let rx0 = x.max(tx0);
                let rx1 = x1.min(tx0 + ts);
                let tile = self.tile(col, row);
                let n = (rx1 - rx0) as usize * 3;
                for yy in ry0..ry1 {
                    let s = ((yy - ty0) as usize * ts as usize + (rx0 - tx0) as usize) * 3;
                    let d = ((yy - y) as usize * dst_stride + (rx0 - x) as usize) * 3;
                    dst[d..d + n].copy_from_slice(&tile[s..s + n]);
                }
            }
        }
    }
}

/// A tiled multi-resolution slide with physical calibration.
#[derive(Debug, Clone)]
pub struct SlidePyramid {
    pub slide_id: String,
    pub case_id: String,
    pub mpp_base: f64,
    pub magnification_base: f64,
    pub tile_size: u32,
    pub(crate) levels: Vec<Level>,
    pub ground_truth: Option<GroundTruth>,
}

/// Builds a full pyramid from a flat level-0 image.
///
/// Levels are produced by repeated 2×2 box averaging until the largest
/// dimension fits in one tile. Level 0 is byte-identical to `image`.
pub fn ingest_base_image(
    image: RgbRaster,
    mpp_base: f64,
    magnification_base: f64,
    tile_size: u32,
) -> Result<SlidePyramid> {
    if image.width() == 0 || image.height() == 0 {
        return Err(Error::invalid("image has zero area"));
    }
    if !(mpp_base > 0.0) || !mpp_base.is_finite() {
        return Err(Error::invalid(format!("mpp_base must be positive, got {mpp_base}")));
    }
    if !(magnification_base > 0.0) || !magnification_base.is_finite() {
        return Err(Error::invalid(format!(
            "magnification_base must be positive, got {magnification_base}"
        )));
    }
    if !tile_size.is_power_of_two() || tile_size < 64 {
        return Err(Error::invalid(format!("tile_size must be a power of two >= 64, got {tile_size}")));
    }
    let mut levels = Vec::new();
    let mut current = image;
    loop {
        levels.push(Level::from_raster(levels.len(), &current, tile_size));
        if current.width().max(current.height()) <= tile_size {
            break;
        }
        current = current.downsample_2x();
    }
    Ok(SlidePyramid {
        slide_id: "slide".to_string(),
        case_id: "case".to_string(),
        mpp_base,
        magnification_base,
        tile_size,
        levels,
        ground_truth: None,
    })
}

impl SlidePyramid {
    pub fn with_ids(mut self, case_id: impl Into<String>, slide_id: impl Into<String>) -> Self {
        self.case_id = case_id.into();
        self.slide_id = slide_id.into();
        self
    }

    pub fn with_ground_truth(mut self, gt: Option<GroundTruth>) -> Self {
        self.ground_truth = gt;
        self
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, index: usize) -> Result<&Level> {
        self.levels
            .get(index)
            .ok_or_else(|| Error::invalid(format!("level {index} does not exist ({} levels)", self.levels.len())))
    }

    /// Effective µm/px at `level`.
    pub fn level_mpp(&self, level: usize) -> f64 {
        self.mpp_base * (1u64 << level) as f64
    }

    pub fn level_magnification(&self, level: usize) -> f64 {
        self.magnification_base / (1u64 << level) as f64
    }

    /// Level whose µm/px equals `target_mpp` (relative tolerance 1e-6).
    pub fn level_for_mpp(&self, target_mpp: f64) -> Option<usize> {
        (0..self.levels.len()).find(|&i| {
            let m = self.level_mpp(i);
            (m - target_mpp).abs() <= 1e-6 * target_mpp.abs().max(m)
        })
    }

    /// Level whose nominal magnification equals `magnification`.
    pub fn level_for_magnification(&self, magnification: f64) -> Option<usize> {
        (0..self.levels.len()).find(|&i| {
            let m = self.level_magnification(i);
            (m - magnification).abs() <= 1e-6 * magnification.abs().max(m)
        })
    }

    /// Coarsest level; used for thumbnails.
    pub fn thumbnail_level(&self) -> usize {
        self.levels.len() - 1
    }

    /// Reads a `size × size` patch. Area outside the level is zero-filled and
    /// the patch is flagged partial.
    pub fn read_region(&self, coord: &PatchCoordinate) -> Result<Patch> {
        let level = self.level(coord.level)?;
        if coord.size == 0 {
            return Err(Error::invalid("patch size must be positive"));
        }
        let size = coord.size as i64;
        let mut pixels = vec![0u8; size as usize * size as usize * 3];
        let x0 = coord.x.max(0);
        let y0 = coord.y.max(0);
        let x1 = (coord.x + size).min(level.width as i64);
        let y1 = (coord.y + size).min(level.height as i64);
        let partial = x0 != coord.x || y0 != coord.y || x1 != coord.x + size || y1 != coord.y + size;
        if x1 > x0 && y1 > y0 {
            let offset = ((y0 - coord.y) as usize * size as usize + (x0 - coord.x) as usize) * 3;
            level.copy_rect(
                x0 as u32,
                y0 as u32,
                (x1 - x0) as u32,
                (y1 - y0) as u32,
                &mut pixels[offset..],
                size as usize,
            );
        }
        Ok(Patch {
            pixels,
            width: coord.size,
            height: coord.size,
            origin: PatchOrigin { level: coord.level, x: coord.x, y: coord.y },
            mpp: self.level_mpp(coord.level),
            partial,
        })
    }
}
