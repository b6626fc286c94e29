use std::path::Path;

use crate::error::{Error, Result};

/// Flat interleaved RGB8 image.
#[derive(Clone, PartialEq, Eq)]
pub struct RgbRaster {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl std::fmt::Debug for RgbRaster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RgbRaster")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl RgbRaster {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(Error::invalid(format!(
                "raster buffer has {} bytes, expected {expected} for {width}x{height}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let n = width as usize * height as usize;
        let mut data = Vec::with_capacity(n * 3);
        for _ in 0..n {
            data.extend_from_slice(&rgb);
        }
        Self { width, height, data }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Copy of the rectangle `[x, x+w) × [y, y+h)`; must lie inside the raster.
    pub fn crop(&self, x: u32, y: u32, w: u32, h: u32) -> RgbRaster {
        assert!(x + w <= self.width && y + h <= self.height, "crop out of bounds");
        let mut data = Vec::with_capacity(w as usize * h as usize * 3);
        for row in y..y + h {
            let start = (row as usize * self.width as usize + x as usize) * 3;
            data.extend_from_slice(&self.data[start..start + w as usize * 3]);
        }
        RgbRaster { width: w, height: h, data }
    }

    /// Half-size copy using a 2×2 box filter with round-half-up. Boxes on an
    /// odd trailing row or column average only the pixels that exist.
    pub fn downsample_2x(&self) -> RgbRaster {
        let (w, h) = (self.width as usize, self.height as usize);
        let nw = w.div_ceil(2);
        let nh = h.div_ceil(2);
        let mut data = vec![0u8; nw * nh * 3];
        for oy in 0..nh {
            let y0 = oy * 2;
            let y1 = (y0 + 1).min(h - 1);
            for ox in 0..nw {
                let x0 = ox * 2;
                let x1 = (x0 + 1).min(w - 1);
                let n = (1 + (x1 != x0) as u32) * (1 + (y1 != y0) as u32);
                let o = (oy * nw + ox) * 3;
                for c in 0..3 {
                    let mut sum = self.data[(y0 * w + x0) * 3 + c] as u32;
                    if x1 != x0 {
                        sum += self.data[(y0 * w + x1) * 3 + c] as u32;
                    }
                    if y1 != y0 {
                        sum += self.data[(y1 * w + x0) * 3 + c] as u32;
                        if x1 != x0 {
                            sum += self.data[(y1 * w + x1) * 3 + c] as u32;
                        }
                    }
                    data[o + c] = ((sum + n / 2) / n) as u8;
                }
            }
        }
        RgbRaster { width: nw as u32, height: nh as u32, data }
    }

    pub fn to_image(&self) -> image::RgbImage {
        image::RgbImage::from_raw(self.width, self.height, self.data.clone())
            .expect("raster buffer matches dimensions")
    }

    /// Writes the raster as a PNG file.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_image()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(Error::from)
    }
}

impl From<image::RgbImage> for RgbRaster {
    fn from(img: image::RgbImage) -> Self {
        let (width, height) = img.dimensions();
        Self { width, height, data: img.into_raw() }
    }
}

/// Reads a PNG or binary PPM (P6) file into an RGB raster.
pub fn load_flat_image(path: &Path) -> Result<RgbRaster> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()?;
    Ok(img.to_rgb8().into())
}

/// Decodes PNG or PPM bytes already in memory.
pub fn decode_flat_image(bytes: &[u8]) -> Result<RgbRaster> {
    let img = image::ImageReader::new(std::io::Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::io("<memory>", e))?
        .decode()?;
    Ok(img.to_rgb8().into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn downsample_rounds_half_up() {
        let r = RgbRaster::new(2, 2, vec![0, 0, 0, 0, 0, 0, 0, 0, 0, 255, 255, 255]).unwrap();
        let d = r.downsample_2x();
        assert_eq!((d.width(), d.height()), (1, 1));
        assert_eq!(d.pixel(0, 0), [64, 64, 64]);
    }

    #[test]
    fn downsample_odd_edges_average_existing_pixels() {
        let r = RgbRaster::from_fn(3, 1, |x, _| [(x * 100) as u8, 0, 0]);
        let d = r.downsample_2x();
        assert_eq!((d.width(), d.height()), (2, 1));
        assert_eq!(d.pixel(0, 0)[0], 50);
        assert_eq!(d.pixel(1, 0)[0], 200);
    }

    #[test]
    fn rejects_mismatched_buffer() {
        assert!(matches!(RgbRaster::new(2, 2, vec![0; 11]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn ppm_and_png_load() {
        let dir = tempfile::tempdir().unwrap();
        let ppm = dir.path().join("a.ppm");
        let mut bytes = b"P6\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        std::fs::write(&ppm, bytes).unwrap();
        let r = load_flat_image(&ppm).unwrap();
        assert_eq!(r.data(), &[1, 2, 3, 4, 5, 6]);

        let png = dir.path().join("a.png");
        r.save_png(&png).unwrap();
        assert_eq!(load_flat_image(&png).unwrap(), r);
        assert!(matches!(load_flat_image(&dir.path().join("nope.png")), Err(Error::NotFound(_))));
    }
}
