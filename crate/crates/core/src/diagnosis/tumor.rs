use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::InputPrep;
use crate::slide::{PatchCoordinate, SlidePyramid};
use crate::triage::{needs_secondary, secondary_verdict, Provenance, TriageAudit, TriageConfig, TriageHandles, Verdict};

/// Minimum share of a region-grid patch covered by tumor detections.
pub const DEFAULT_REGION_OVERLAP: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TumorRecord {
    pub coord: PatchCoordinate,
    /// Probability from the base classifier.
    pub p_base: f64,
    /// The deciding statistic: `p_base`, or the vote probability when triaged.
    pub p_tumor: f64,
    pub is_tumor: bool,
    pub triaged: bool,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TumorMap {
    pub level: usize,
    pub patch_size: u32,
    /// Microns per pixel of `level`.
    pub mpp: f64,
    /// One record per grid patch, in grid order.
    pub records: Vec<TumorRecord>,
    pub audits: Vec<TriageAudit>,
    /// Patches whose stain normalization fell back to the raw pixels.
    pub normalization_passthrough: usize,
}

impl TumorMap {
    pub fn tumor_count(&self) -> usize {
        self.records.iter().filter(|r| r.is_tumor).count()
    }

    pub fn triaged_count(&self) -> usize {
        self.records.iter().filter(|r| r.triaged).count()
    }
}

/// Classifies every grid patch and sends band-interior patches through the
/// triage vote. Patches are processed on the current rayon pool; the output
/// order always matches `grid`.
pub fn detect_tumor(
    pyramid: &SlidePyramid,
    grid: &[PatchCoordinate],
    handles: TriageHandles<'_>,
    prep: &InputPrep,
    cfg: &TriageConfig,
) -> Result<TumorMap> {
    let first = grid.first().ok_or(Error::EmptySlide)?;
    if grid.iter().any(|c| c.level != first.level || c.size != first.size) {
        return Err(Error::invalid("detection grid mixes levels or patch sizes"));
    }
    let results = grid
        .par_iter()
        .map(|coord| -> Result<(TumorRecord, Option<TriageAudit>, bool)> {
            let raw = pyramid.read_region(coord)?;
            let (input, passthrough) = prep.prepare(&raw, handles.base);
            let p = handles.base.predict(&input)?.positive();
            if !needs_secondary(p, cfg) {
                let v = Verdict::base(p, cfg);
                let record = TumorRecord {
                    coord: *coord,
                    p_base: p,
                    p_tumor: p,
                    is_tumor: v.is_tumor,
                    triaged: false,
                    provenance: Provenance::Base,
                };
                return Ok((record, None, passthrough));
            }
            let audit = secondary_verdict(handles, pyramid, coord, &input, p, prep, cfg)?;
            let v = audit.verdict;
            let record = TumorRecord {
                coord: *coord,
                p_base: p,
                p_tumor: v.probability,
                is_tumor: v.is_tumor,
                triaged: true,
                provenance: v.provenance,
            };
            Ok((record, Some(audit), passthrough))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::with_capacity(results.len());
    let mut audits = Vec::new();
    let mut normalization_passthrough = 0;
    for (record, audit, passthrough) in results {
        records.push(record);
        audits.extend(audit);
        normalization_passthrough += passthrough as usize;
    }
    Ok(TumorMap {
        level: first.level,
        patch_size: first.size,
        mpp: pyramid.level_mpp(first.level),
        records,
        audits,
        normalization_passthrough,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlideMetrics {
    pub tissue_patches: usize,
    pub tumor_patches: usize,
    /// mm²
    pub tissue_area: f64,
    /// mm²
    pub tumor_area: f64,
    pub tumor_fraction: f64,
}

/// Physical area of a square patch in mm².
pub fn patch_area_mm2(patch_size: u32, mpp: f64) -> f64 {
    let side = patch_size as f64 * mpp / 1000.0;
    side * side
}

/// Areas from patch counts: every grid patch is tissue, tumor patches are
/// those flagged in the map. A slide without tissue has fraction 0.
pub fn slide_metrics(map: &TumorMap) -> SlideMetrics {
    let area = patch_area_mm2(map.patch_size, map.mpp);
    let tissue_patches = map.records.len();
    let tumor_patches = map.tumor_count();
    let tissue_area = tissue_patches as f64 * area;
    let tumor_area = tumor_patches as f64 * area;
    let tumor_fraction = if tissue_patches == 0 { 0.0 } else { tumor_patches as f64 / tissue_patches as f64 };
    SlideMetrics { tissue_patches, tumor_patches, tissue_area, tumor_area, tumor_fraction }
}

/// Re-grids the detected tumor region at `patch_size` on `level`.
///
/// A grid patch is kept when at least `min_overlap` of its area is covered by
/// tumor detections. Output is row-major.
pub fn tumor_region_grid(
    pyramid: &SlidePyramid,
    map: &TumorMap,
    level: usize,
    patch_size: u32,
    min_overlap: f64,
) -> Result<Vec<PatchCoordinate>> {
    if patch_size == 0 {
        return Err(Error::invalid("patch size must be positive"));
    }
    let lvl = pyramid.level(level)?;
    let (cols, rows) = (lvl.width().div_ceil(patch_size) as i64, lvl.height().div_ceil(patch_size) as i64);
    // overlap accumulated in level-0 pixels; detections never overlap
    let cell = (patch_size as i64) << level;
    let mut covered: BTreeMap<(i64, i64), i64> = BTreeMap::new();
    for r in map.records.iter().filter(|r| r.is_tumor) {
        let (x0, y0, x1, y1) = r.coord.base_extent();
        let (c0, c1) = (x0.max(0) / cell, ((x1 + cell - 1) / cell).min(cols));
        let (r0, r1) = (y0.max(0) / cell, ((y1 + cell - 1) / cell).min(rows));
        for row in r0..r1 {
            for col in c0..c1 {
                let ox = (x1.min((col + 1) * cell) - x0.max(col * cell)).max(0);
                let oy = (y1.min((row + 1) * cell) - y0.max(row * cell)).max(0);
                if ox * oy > 0 {
                    *covered.entry((row, col)).or_default() += ox * oy;
                }
            }
        }
    }
    let full = (cell * cell) as f64;
    Ok(covered
        .into_iter()
        .filter(|&(_, a)| a as f64 / full >= min_overlap)
        .map(|((row, col), _)| PatchCoordinate::new(level, col * patch_size as i64, row * patch_size as i64, patch_size))
        .collect())
}
