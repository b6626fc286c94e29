use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::round_half_up;
use crate::slide::{PatchCoordinate, RgbRaster, SlidePyramid};

pub const DEFAULT_ALPHA: f64 = 0.4;

/// Categorical colors, indexed by label.
pub const LABEL_PALETTE: [[u8; 3]; 8] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapMode {
    /// Values are probabilities in [0, 1].
    Probability,
    /// Values are label indices.
    Label,
}

fn channel(v: f64) -> u8 {
    round_half_up(v).clamp(0.0, 255.0) as u8
}

/// Linear blue (p = 0) to red (p = 1) ramp with zero green.
pub fn probability_color(p: f64) -> [u8; 3] {
    let p = p.clamp(0.0, 1.0);
    [channel(255.0 * p), 0, channel(255.0 * (1.0 - p))]
}

pub fn label_color(label: usize) -> [u8; 3] {
    LABEL_PALETTE[label % LABEL_PALETTE.len()]
}

/// Overlays per-patch values on one pyramid level.
///
/// Every patch must share a level at or below `level` and sit on its own
/// `size` lattice. Patch edges are projected by integer division, so
/// adjacent patches tile the output without gaps. Pixels outside every
/// patch keep the level's colors.
pub fn render_heatmap(
    values: &[(PatchCoordinate, f64)],
    pyramid: &SlidePyramid,
    level: usize,
    mode: HeatmapMode,
    alpha: f64,
) -> Result<RgbRaster> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha {alpha} outside [0, 1]")));
    }
    let mut out = pyramid.level(level)?.to_raster();
    let Some((first, _)) = values.first() else {
        return Ok(out);
    };
    for (c, v) in values {
        if c.level != first.level || c.size != first.size {
            return Err(Error::invalid("heatmap grid mixes levels or patch sizes"));
        }
        if c.level > level || c.size == 0 || c.x < 0 || c.y < 0 || c.x % c.size as i64 != 0 || c.y % c.size as i64 != 0 {
            return Err(Error::invalid(format!("patch {c:?} does not align to a grid on level {level}")));
        }
        if !v.is_finite() || (mode == HeatmapMode::Label && (*v < 0.0 || v.fract() != 0.0)) {
            return Err(Error::invalid(format!("heatmap value {v} invalid for {mode:?} mode")));
        }
    }
    let shift = (level - first.level) as u32;
    let (w, h) = (out.width() as i64, out.height() as i64);
    for (c, v) in values {
        let color = match mode {
            HeatmapMode::Probability => probability_color(*v),
            HeatmapMode::Label => label_color(*v as usize),
        };
        let s = c.size as i64;
        let (x0, y0) = ((c.x >> shift).min(w), (c.y >> shift).min(h));
        let (x1, y1) = (((c.x + s) >> shift).min(w), ((c.y + s) >> shift).min(h));
        for y in y0..y1 {
            for x in x0..x1 {
                let t = out.pixel(x as u32, y as u32);
                let mut px = [0u8; 3];
                for k in 0..3 {
                    px[k] = channel(alpha * color[k] as f64 + (1.0 - alpha) * t[k] as f64);
                }
                out.put_pixel(x as u32, y as u32, px);
            }
        }
    }
    Ok(out)
}
