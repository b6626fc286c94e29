//! Multi-resolution slide pyramids.
//!
//! A slide is held as a stack of levels, each a dense grid of fixed-size RGB8
//! tiles. Level 0 is the scanned resolution; every further level halves both
//! dimensions with a 2×2 box filter until the whole level fits in one tile.
//! Pyramids are immutable once built and can be read from any number of
//! threads concurrently.

mod grid;
mod mask;
mod patch;
mod pyramid;
mod raster;
mod store;

pub use grid::{grid_patches, tissue_fraction, DEFAULT_MIN_TISSUE_FRACTION};
pub use mask::{tissue_mask, BinaryMask, DEFAULT_OD_THRESHOLD};
pub use patch::{Patch, PatchCoordinate, PatchOrigin};
pub use pyramid::{ingest_base_image, GroundTruth, Level, SlidePyramid};
pub use raster::{decode_flat_image, load_flat_image, RgbRaster};
pub use store::{open_pyramid, save_pyramid, LevelEntry, PyramidManifest, MANIFEST_FILE};
