//! On-disk pyramid layout: `manifest.json` plus one raw RGB8 file per tile at
//! `L{level}/{row}_{col}.rgb`, each exactly `tile_size² · 3` bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GroundTruth, Level, SlidePyramid};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelEntry {
    pub index: usize,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PyramidManifest {
    pub slide_id: String,
    pub case_id: String,
    pub mpp_base: f64,
    pub magnification_base: f64,
    pub tile_size: u32,
    pub levels: Vec<LevelEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
}

impl PyramidManifest {
    pub fn of(p: &SlidePyramid) -> Self {
        Self {
            slide_id: p.slide_id.clone(),
            case_id: p.case_id.clone(),
            mpp_base: p.mpp_base,
            magnification_base: p.magnification_base,
            tile_size: p.tile_size,
            levels: p
                .levels
                .iter()
                .map(|l| LevelEntry { index: l.index, width: l.width, height: l.height })
                .collect(),
            ground_truth: p.ground_truth.clone(),
        }
    }
}

pub fn save_pyramid(pyramid: &SlidePyramid, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for level in &pyramid.levels {
        let ldir = dir.join(format!("L{}", level.index));
        fs::create_dir_all(&ldir).map_err(|e| Error::io(&ldir, e))?;
        for row in 0..level.tiles_y() {
            for col in 0..level.tiles_x() {
                let path = ldir.join(format!("{row}_{col}.rgb"));
                fs::write(&path, level.tile(col, row)).map_err(|e| Error::io(&path, e))?;
            }
        }
    }
    // manifest last: its presence marks a complete pyramid
    let manifest = serde_json::to_vec_pretty(&PyramidManifest::of(pyramid))?;
    let mpath = dir.join(MANIFEST_FILE);
    fs::write(&mpath, manifest).map_err(|e| Error::io(&mpath, e))?;
    Ok(())
}

pub fn open_pyramid(dir: &Path) -> Result<SlidePyramid> {
    let mpath = dir.join(MANIFEST_FILE);
    let bytes = fs::read(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let manifest: PyramidManifest = serde_json::from_slice(&bytes)?;
    if manifest.levels.is_empty() {
        return Err(Error::invalid("pyramid manifest lists no levels"));
    }
    if !manifest.tile_size.is_power_of_two() || manifest.tile_size < 64 {
        return Err(Error::invalid(format!("bad tile size {}", manifest.tile_size)));
    }
    let ts = manifest.tile_size;
    let tile_bytes = ts as usize * ts as usize * 3;
    let mut levels = Vec::with_capacity(manifest.levels.len());
    for (i, entry) in manifest.levels.iter().enumerate() {
        if entry.index != i {
            return Err(Error::invalid(format!("level entry {i} has index {}", entry.index)));
        }
        if i > 0 {
            let prev = &manifest.levels[i - 1];
            if entry.width != prev.width.div_ceil(2) || entry.height != prev.height.div_ceil(2) {
                return Err(Error::invalid(format!("level {i} dims are not halves of level {}", i - 1)));
            }
        }
        let tx = entry.width.div_ceil(ts);
        let ty = entry.height.div_ceil(ts);
        let mut tiles = Vec::with_capacity((tx * ty) as usize);
        for row in 0..ty {
            for col in 0..tx {
                let path = dir.join(format!("L{i}")).join(format!("{row}_{col}.rgb"));
                let data = fs::read(&path).map_err(|e| Error::io(&path, e))?;
                if data.len() != tile_bytes {
                    return Err(Error::invalid(format!(
                        "tile {} has {} bytes, expected {tile_bytes}",
                        path.display(),
                        data.len()
                    )));
                }
                tiles.push(data.into_boxed_slice());
            }
        }
        levels.push(Level { index: i, width: entry.width, height: entry.height, tile_size: ts, tiles });
    }
    let last = levels.last().expect("non-empty");
    if last.width.max(last.height) > ts {
        return Err(Error::invalid("coarsest level does not fit in one tile"));
    }
    Ok(SlidePyramid {
        slide_id: manifest.slide_id,
        case_id: manifest.case_id,
        mpp_base: manifest.mpp_base,
        magnification_base: manifest.magnification_base,
        tile_size: ts,
        levels,
        ground_truth: manifest.ground_truth,
    })
}
