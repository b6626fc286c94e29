use crate::num::Scalar;

/// Reference white intensity.
pub const DEFAULT_IO: f64 = 255.0;

/// Optical density of one channel value: `-log10((v + 1) / (io + 1))`.
#[inline]
pub fn value_to_od<T: Scalar>(v: T, io: T) -> T {
    -((v + T::one()) / (io + T::one())).log10()
}

/// Inverse of [`value_to_od`] before rounding and clamping.
#[inline]
pub fn od_to_value<T: Scalar>(od: T, io: T) -> T {
    (io + T::one()) * T::lit(10.0).powf(-od) - T::one()
}

/// Converts an interleaved RGB8 buffer to per-pixel optical densities.
///
/// # Panics
/// If `io` is not positive.
pub fn rgb_to_od<T: Scalar>(pixels: &[u8], io: T) -> Vec<[T; 3]> {
    assert!(io > T::zero(), "reference intensity must be positive");
    let table: Vec<T> = (0..256).map(|v| value_to_od(T::lit(v as f64), io)).collect();
    pixels
        .chunks_exact(3)
        .map(|p| [table[p[0] as usize], table[p[1] as usize], table[p[2] as usize]])
        .collect()
}

/// Converts optical densities back to RGB8, rounding and clamping to [0, 255].
pub fn od_to_rgb<T: Scalar>(od: &[[T; 3]], io: T) -> Vec<u8> {
    let max = T::lit(255.0);
    let mut out = Vec::with_capacity(od.len() * 3);
    for px in od {
        for &c in px {
            let v = od_to_value(c, io).round();
            out.push(v.max(T::zero()).min(max).to_u8().unwrap_or(0));
        }
    }
    out
}
