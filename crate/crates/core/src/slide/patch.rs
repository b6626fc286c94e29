use serde::{Deserialize, Serialize};

/// Square patch location on one pyramid level, in that level's pixels.
///
/// `x`/`y` are signed: context patches around a slide border may start left
/// of or above the level; such reads are zero-padded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PatchCoordinate {
    pub level: usize,
    pub x: i64,
    pub y: i64,
    pub size: u32,
}

impl PatchCoordinate {
    pub fn new(level: usize, x: i64, y: i64, size: u32) -> Self {
        Self { level, x, y, size }
    }

    /// Geometric centre in level pixels.
    pub fn center(&self) -> (f64, f64) {
        let half = self.size as f64 / 2.0;
        (self.x as f64 + half, self.y as f64 + half)
    }

    /// Row-major ordering key.
    pub fn raster_key(&self) -> (usize, i64, i64, u32) {
        (self.level, self.y, self.x, self.size)
    }

    /// Half-open extent in level-0 pixels.
    pub fn base_extent(&self) -> (i64, i64, i64, i64) {
        let s = 1i64 << self.level;
        (self.x * s, self.y * s, (self.x + self.size as i64) * s, (self.y + self.size as i64) * s)
    }
}

/// Where a patch was read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PatchOrigin {
    pub level: usize,
    pub x: i64,
    pub y: i64,
}

/// An RGB8 patch of pixels read from a slide.
#[derive(Clone, PartialEq)]
pub struct Patch {
    pub pixels: Vec<u8>,
    pub width: u32,
    pub height: u32,
    pub origin: PatchOrigin,
    pub mpp: f64,
    /// Part of the requested area fell outside the level and was zero-filled.
    pub partial: bool,
}

impl std::fmt::Debug for Patch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Patch")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("origin", &self.origin)
            .field("mpp", &self.mpp)
            .field("partial", &self.partial)
            .finish_non_exhaustive()
    }
}

impl Patch {
    /// Builds a free-standing patch (origin at level 0, (0, 0)).
    pub fn from_pixels(width: u32, height: u32, pixels: Vec<u8>, mpp: f64) -> Self {
        assert_eq!(pixels.len(), width as usize * height as usize * 3, "patch buffer length");
        Self {
            pixels,
            width,
            height,
            origin: PatchOrigin { level: 0, x: 0, y: 0 },
            mpp,
            partial: false,
        }
    }

    pub fn filled(size: u32, rgb: [u8; 3]) -> Self {
        let mut px = Vec::with_capacity(size as usize * size as usize * 3);
        for _ in 0..size as usize * size as usize {
            px.extend_from_slice(&rgb);
        }
        Self::from_pixels(size, size, px, 1.0)
    }

    pub fn with_origin(mut self, origin: PatchOrigin) -> Self {
        self.origin = origin;
        self
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Bilinear resample to `size × size`, keeping origin metadata; `mpp`
    /// scales with the resampling factor.
    pub fn resized(&self, size: u32) -> Patch {
        if self.width == size && self.height == size {
            return self.clone();
        }
        let img = image::RgbImage::from_raw(self.width, self.height, self.pixels.clone())
            .expect("patch buffer matches dimensions");
        let out = image::imageops::resize(&img, size, size, image::imageops::FilterType::Triangle);
        Patch {
            pixels: out.into_raw(),
            width: size,
            height: size,
            origin: self.origin,
            mpp: self.mpp * self.width as f64 / size as f64,
            partial: self.partial,
        }
    }
}
