use serde::{Deserialize, Serialize};

use super::SlidePyramid;
use crate::error::{Error, Result};

/// Mean optical density marking a cell as tissue.
pub const DEFAULT_OD_THRESHOLD: f64 = 0.15;

/// Coarse tissue/background grid over one pyramid level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryMask {
    pub level: usize,
    pub stride: u32,
    /// Dimensions of the level the mask was computed on.
    pub level_width: u32,
    pub level_height: u32,
    pub cols: u32,
    pub rows: u32,
    pub cells: Vec<bool>,
}

impl BinaryMask {
    pub fn get(&self, col: u32, row: u32) -> bool {
        self.cells[(row * self.cols + col) as usize]
    }

    pub fn true_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn true_fraction(&self) -> f64 {
        if self.cells.is_empty() {
            0.0
        } else {
            self.true_count() as f64 / self.cells.len() as f64
        }
    }

    /// Pixel extent of a cell, clipped to the level.
    pub fn cell_extent(&self, col: u32, row: u32) -> (u32, u32, u32, u32) {
        let x0 = col * self.stride;
        let y0 = row * self.stride;
        (x0, y0, (x0 + self.stride).min(self.level_width), (y0 + self.stride).min(self.level_height))
    }
}

/// Per-channel optical density against a 255 white point, with the +1 guard.
fn od_table() -> [f64; 256] {
    let mut t = [0.0; 256];
    for (v, slot) in t.iter_mut().enumerate() {
        *slot = -((v as f64 + 1.0) / 256.0).log10();
    }
    t
}

/// Marks `stride × stride` cells whose mean per-pixel optical density (mean
/// over RGB) reaches `od_threshold`.
pub fn tissue_mask(pyramid: &SlidePyramid, level: usize, od_threshold: f64, stride: u32) -> Result<BinaryMask> {
    let lvl = pyramid.level(level)?;
    if !(od_threshold > 0.0 && od_threshold < 3.0) {
        return Err(Error::invalid(format!("od_threshold must be in (0, 3), got {od_threshold}")));
    }
    if stride == 0 {
        return Err(Error::invalid("mask stride must be positive"));
    }
    let table = od_table();
    let cols = lvl.width.div_ceil(stride);
    let rows = lvl.height.div_ceil(stride);
    let mut sums = vec![0.0f64; (cols * rows) as usize];
    let mut counts = vec![0u64; (cols * rows) as usize];
    let ts = lvl.tile_size;
    for trow in 0..lvl.tiles_y() {
        for tcol in 0..lvl.tiles_x() {
            let tile = lvl.tile(tcol, trow);
            let x0 = tcol * ts;
            let y0 = trow * ts;
            let cw = (lvl.width - x0).min(ts);
            let ch = (lvl.height - y0).min(ts);
            for dy in 0..ch {
                let row_cell = ((y0 + dy) / stride * cols) as usize;
                let base = dy as usize * ts as usize * 3;
                for dx in 0..cw {
                    let i = base + dx as usize * 3;
                    let od = table[tile[i] as usize] + table[tile[i + 1] as usize] + table[tile[i + 2] as usize];
                    let cell = row_cell + ((x0 + dx) / stride) as usize;
                    sums[cell] += od / 3.0;
                    counts[cell] += 1;
                }
            }
        }
    }
    let cells = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &n)| n > 0 && s / n as f64 >= od_threshold)
        .collect();
    Ok(BinaryMask {
        level,
        stride,
        level_width: lvl.width,
        level_height: lvl.height,
        cols,
        rows,
        cells,
    })
}
