//! Deterministic synthetic inputs: H&E-like stain mixtures and slides with
//! planted regions. Used by tests, benchmarks and demos; every generator is
//! a pure function of its arguments and seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::slide::{Patch, RgbRaster};

/// Typical hematoxylin OD direction (R, G, B).
pub const HE_REFERENCE_H: [f64; 3] = [0.65, 0.70, 0.29];
/// Typical eosin OD direction (R, G, B).
pub const HE_REFERENCE_E: [f64; 3] = [0.07, 0.99, 0.11];

pub fn unit3(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v.map(|c| c / n)
}

/// Renders one pixel from stain concentrations via Beer–Lambert.
pub fn mix_pixel(h: [f64; 3], e: [f64; 3], ch: f64, ce: f64) -> [u8; 3] {
    let (h, e) = (unit3(h), unit3(e));
    [0, 1, 2].map(|k| {
        let od = h[k] * ch + e[k] * ce;
        (256.0 * 10f64.powf(-od) - 1.0).round().clamp(0.0, 255.0) as u8
    })
}

/// Concentration field shared by all mixtures with the same `seed`.
///
/// Pixels are drawn like tissue: nuclei (hematoxylin with a trace of eosin),
/// cytoplasm/stroma (eosin with a trace of hematoxylin), mixed regions and
/// about 10% bare glass.
pub fn concentration_field(size: u32, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size as usize * size as usize)
        .map(|_| match rng.gen_range(0..20) {
            0..=1 => (0.0, 0.0),
            2..=7 => {
                let ch = rng.gen_range(0.3..1.3);
                (ch, ch * rng.gen_range(0.0..0.04))
            }
            8..=15 => {
                let ce = rng.gen_range(0.2..0.9);
                (ce * rng.gen_range(0.0..0.04), ce)
            }
            _ => (rng.gen_range(0.05..0.8), rng.gen_range(0.05..0.6)),
        })
        .collect()
}

/// Square patch mixing stains `h` and `e` (any positive scale; normalized
/// internally) over the seeded concentration field multiplied by `scale`.
pub fn he_mixture_patch(h: [f64; 3], e: [f64; 3], size: u32, seed: u64, scale: f64) -> Patch {
    let px: Vec<u8> = concentration_field(size, seed)
        .into_iter()
        .flat_map(|(ch, ce)| mix_pixel(h, e, ch * scale, ce * scale))
        .collect();
    Patch::from_pixels(size, size, px, 0.25)
}

/// Random pair of stain directions near the standard H&E basis, perturbed by
/// up to `jitter` per component. Draws are repeated until hematoxylin keeps
/// the larger blue OD component, so the pair obeys the column ordering rule.
pub fn jittered_stains(seed: u64, jitter: f64) -> ([f64; 3], [f64; 3]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_57a1);
    let mut j = |v: [f64; 3]| unit3(v.map(|c| (c + rng.gen_range(-jitter..=jitter)).max(0.01)));
    loop {
        let (h, e) = (j(HE_REFERENCE_H), j(HE_REFERENCE_E));
        if h[2] > e[2] {
            return (h, e);
        }
    }
}

/// Slide raster with white background and an H&E tissue texture inside the
/// rectangles of `tissue`; `dense` rectangles get stronger hematoxylin.
/// Rectangles are `(x0, y0, x1, y1)` half-open in level-0 pixels.
pub fn planted_slide(
    width: u32,
    height: u32,
    tissue: &[(u32, u32, u32, u32)],
    dense: &[(u32, u32, u32, u32)],
) -> RgbRaster {
    let inside = |r: &(u32, u32, u32, u32), x: u32, y: u32| x >= r.0 && x < r.2 && y >= r.1 && y < r.3;
    let light = mix_pixel(HE_REFERENCE_H, HE_REFERENCE_E, 0.35, 0.45);
    let heavy = mix_pixel(HE_REFERENCE_H, HE_REFERENCE_E, 0.95, 0.35);
    RgbRaster::from_fn(width, height, |x, y| {
        if dense.iter().any(|r| inside(r, x, y)) {
            heavy
        } else if tissue.iter().any(|r| inside(r, x, y)) {
            light
        } else {
            [255, 255, 255]
        }
    })
}
