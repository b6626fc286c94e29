use super::od::{od_to_rgb, rgb_to_od, DEFAULT_IO};
use super::profile::StainProfile;
use crate::error::{Error, Result};
use crate::num::{percentile, percentile_sorted, symmetric_eigen3, Scalar};
use crate::slide::Patch;

/// Mean-OD cutoff below which a pixel counts as transparent.
pub const DEFAULT_BETA: f64 = 0.15;
/// Percentile (and its complement) of the angular distribution taken as the
/// stain extremes.
pub const DEFAULT_ALPHA: f64 = 1.0;
pub const MIN_STAINED_PIXELS: usize = 100;

const CONCENTRATION_PERCENTILE: f64 = 99.0;
/// Second/first eigenvalue ratio under which the cloud is treated as rank 1.
const RANK_TOLERANCE: f64 = 1e-3;
/// Smallest angular spread (radians) between the two extremes.
const MIN_ANGULAR_SPREAD: f64 = 0.5 * std::f64::consts::PI / 180.0;

#[inline]
fn dot3<T: Scalar>(a: &[T; 3], b: &[T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Non-negative least squares for a 3×2 system: minimizes `|A c - y|²`
/// subject to `c ≥ 0`, where `a0`/`a1` are the columns of `A`.
///
/// With two unknowns the active-set solution is one of four candidates:
/// the unconstrained optimum, either single-column fit, or zero.
pub fn nnls2<T: Scalar>(a0: &[T; 3], a1: &[T; 3], y: &[T; 3]) -> [T; 2] {
    let g00 = dot3(a0, a0);
    let g01 = dot3(a0, a1);
    let g11 = dot3(a1, a1);
    let b0 = dot3(a0, y);
    let b1 = dot3(a1, y);
    let det = g00 * g11 - g01 * g01;
    if det > T::zero() {
        let c0 = (g11 * b0 - g01 * b1) / det;
        let c1 = (g00 * b1 - g01 * b0) / det;
        if c0 >= T::zero() && c1 >= T::zero() {
            return [c0, c1];
        }
    }
    // objective up to a constant: cᵀGc − 2bᵀc
    let f = |c0: T, c1: T| {
        c0 * c0 * g00 + T::lit(2.0) * c0 * c1 * g01 + c1 * c1 * g11 - T::lit(2.0) * (b0 * c0 + b1 * c1)
    };
    let mut best = [T::zero(), T::zero()];
    let mut best_f = T::zero();
    if g00 > T::zero() && b0 > T::zero() {
        let c = b0 / g00;
        let v = f(c, T::zero());
        if v < best_f {
            best = [c, T::zero()];
            best_f = v;
        }
    }
    if g11 > T::zero() && b1 > T::zero() {
        let c = b1 / g11;
        if f(T::zero(), c) < best_f {
            best = [T::zero(), c];
        }
    }
    best
}

fn unit_nonneg<T: Scalar>(mut v: [T; 3]) -> Option<[T; 3]> {
    if v[0] + v[1] + v[2] < T::zero() {
        v = v.map(|c| -c);
    }
    let v = v.map(|c| c.max(T::zero()));
    let n = dot3(&v, &v).sqrt();
    if !(n > T::epsilon()) {
        return None;
    }
    Some(v.map(|c| c / n))
}

/// Estimates the H&E stain basis of a patch with the Macenko procedure.
///
/// Pixels whose mean OD does not exceed `beta` are dropped. The remaining OD
/// cloud is projected onto the plane of its two leading singular directions;
/// the `alpha`-th and `(100 - alpha)`-th percentile angles in that plane give
/// the two stain vectors. Concentration scales are the 99th percentile of the
/// non-negative unmixing of every pixel.
pub fn estimate_stain_profile<T: Scalar>(patch: &Patch, beta: T, alpha: f64) -> Result<StainProfile<T>> {
    let io = T::lit(DEFAULT_IO);
    let od = rgb_to_od(&patch.pixels, io);
    let third = T::lit(1.0 / 3.0);
    let stained: Vec<[T; 3]> = od
        .iter()
        .copied()
        .filter(|p| (p[0] + p[1] + p[2]) * third > beta)
        .collect();
    if stained.len() < MIN_STAINED_PIXELS {
        return Err(Error::InsufficientTissue { stained: stained.len(), required: MIN_STAINED_PIXELS });
    }

    // Uncentered second moment: its leading eigenvectors are the leading
    // left singular vectors of the 3×N OD matrix.
    let mut m = [[T::zero(); 3]; 3];
    for p in &stained {
        for r in 0..3 {
            for c in r..3 {
                m[r][c] = m[r][c] + p[r] * p[c];
            }
        }
    }
    let n = T::lit(stained.len() as f64);
    for r in 0..3 {
        for c in r..3 {
            m[r][c] = m[r][c] / n;
            m[c][r] = m[r][c];
        }
    }
    let (values, vectors) = symmetric_eigen3(m);
    if !(values[0] > T::zero()) || values[1] <= T::lit(RANK_TOLERANCE) * values[0] {
        return Err(Error::DegenerateStain(format!(
            "OD cloud has rank < 2 (eigenvalues {:.3e}, {:.3e})",
            values[0].as_f64(),
            values[1].as_f64()
        )));
    }
    let mut v1 = vectors[0];
    let v2 = vectors[1];
    let mean_proj = stained.iter().fold(T::zero(), |acc, p| acc + dot3(p, &v1));
    if mean_proj < T::zero() {
        v1 = v1.map(|c| -c);
    }

    let mut angles: Vec<T> = stained.iter().map(|p| dot3(p, &v2).atan2(dot3(p, &v1))).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
    let min_phi = percentile_sorted(&angles, alpha);
    let max_phi = percentile_sorted(&angles, 100.0 - alpha);
    if (max_phi - min_phi).as_f64() < MIN_ANGULAR_SPREAD {
        return Err(Error::DegenerateStain(format!(
            "angular spread {:.4}° below minimum",
            (max_phi - min_phi).as_f64().to_degrees()
        )));
    }
    let along = |phi: T| [0, 1, 2].map(|i| v1[i] * phi.cos() + v2[i] * phi.sin());
    let (a, b) = match (unit_nonneg(along(min_phi)), unit_nonneg(along(max_phi))) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::DegenerateStain("stain direction vanished after sign correction".into())),
    };
    let (h, e) = if a[2] >= b[2] { (a, b) } else { (b, a) };

    let mut c_h = Vec::with_capacity(od.len());
    let mut c_e = Vec::with_capacity(od.len());
    for p in &od {
        let c = nnls2(&h, &e, p);
        c_h.push(c[0]);
        c_e.push(c[1]);
    }
    let max_c = [percentile(&c_h, CONCENTRATION_PERCENTILE), percentile(&c_e, CONCENTRATION_PERCENTILE)];
    if !(max_c[0] > T::zero() && max_c[1] > T::zero()) {
        return Err(Error::DegenerateStain("a stain has no measurable concentration".into()));
    }
    Ok(StainProfile::from_columns(h, e, max_c, io))
}

/// How [`normalize_patch`] treated a patch.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalizeOutcome {
    Normalized,
    /// The patch could not be profiled and was returned unchanged.
    PassThrough(String),
}

#[derive(Debug, Clone)]
pub struct Normalized {
    pub patch: Patch,
    pub outcome: NormalizeOutcome,
}

impl Normalized {
    pub fn passed_through(&self) -> bool {
        matches!(self.outcome, NormalizeOutcome::PassThrough(_))
    }
}

/// Maps a patch's stain appearance onto `reference`.
///
/// Concentrations are unmixed against the patch's own stain basis, rescaled
/// per stain by the ratio of the reference and source 99th-percentile
/// concentrations, and recomposed with the reference basis. Patches whose own
/// basis cannot be estimated come back unchanged with a pass-through flag.
pub fn normalize_patch<T: Scalar>(patch: &Patch, reference: &StainProfile<T>) -> Normalized {
    let source = match estimate_stain_profile::<T>(patch, T::lit(DEFAULT_BETA), DEFAULT_ALPHA) {
        Ok(p) => p,
        Err(err) => {
            return Normalized { patch: patch.clone(), outcome: NormalizeOutcome::PassThrough(err.to_string()) }
        }
    };
    let (sh, se) = (source.column(0), source.column(1));
    let (rh, re) = (reference.column(0), reference.column(1));
    let scale = [
        reference.max_concentrations[0] / source.max_concentrations[0],
        reference.max_concentrations[1] / source.max_concentrations[1],
    ];
    let od = rgb_to_od(&patch.pixels, source.io);
    let recomposed: Vec<[T; 3]> = od
        .iter()
        .map(|p| {
            let c = nnls2(&sh, &se, p);
            let (ch, ce) = (c[0] * scale[0], c[1] * scale[1]);
            [0, 1, 2].map(|i| rh[i] * ch + re[i] * ce)
        })
        .collect();
    let pixels = od_to_rgb(&recomposed, reference.io);
    Normalized {
        patch: Patch { pixels, ..patch.clone() },
        outcome: NormalizeOutcome::Normalized,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stain::angular_distance_deg;
    use crate::synthetic::{he_mixture_patch, unit3, HE_REFERENCE_E, HE_REFERENCE_H};

    #[test]
    fn nnls_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let a0 = unit3([0.65, 0.70, 0.29]);
        let a1 = unit3([0.07, 0.99, 0.11]);
        for _ in 0..500 {
            let y: [f64; 3] = [rng.gen_range(-0.5..2.0), rng.gen_range(-0.5..2.0), rng.gen_range(-0.5..2.0)];
            let c = nnls2(&a0, &a1, &y);
            assert!(c[0] >= 0.0 && c[1] >= 0.0);
            let res = |c0: f64, c1: f64| (0..3).map(|i| (a0[i] * c0 + a1[i] * c1 - y[i]).powi(2)).sum::<f64>();
            let got = res(c[0], c[1]);
            // grid search oracle over the feasible quadrant
            let mut best = f64::INFINITY;
            for i in 0..=300 {
                for j in 0..=300 {
                    best = best.min(res(i as f64 * 0.01, j as f64 * 0.01));
                }
            }
            assert!(got <= best + 1e-9, "nnls residual {got} > grid {best}");
        }
    }

    #[test]
    fn recovers_known_stains() {
        let patch = he_mixture_patch(HE_REFERENCE_H, HE_REFERENCE_E, 128, 3, 1.0);
        let p = estimate_stain_profile::<f64>(&patch, DEFAULT_BETA, DEFAULT_ALPHA).unwrap();
        p.validate().unwrap();
        assert!(angular_distance_deg(p.column(0), unit3(HE_REFERENCE_H)) < 2.0);
        assert!(angular_distance_deg(p.column(1), unit3(HE_REFERENCE_E)) < 2.0);
    }

    #[test]
    fn f32_estimate_agrees_with_f64() {
        let patch = he_mixture_patch(HE_REFERENCE_H, HE_REFERENCE_E, 96, 11, 1.0);
        let p64 = estimate_stain_profile::<f64>(&patch, DEFAULT_BETA, DEFAULT_ALPHA).unwrap();
        let p32 = estimate_stain_profile::<f32>(&patch, DEFAULT_BETA as f32, DEFAULT_ALPHA).unwrap();
        for s in 0..2 {
            assert!(angular_distance_deg(p64.column(s), p32.cast::<f64>().column(s)) < 0.1);
        }
    }

    #[test]
    fn white_patch_is_insufficient() {
        let patch = Patch::filled(64, [255, 255, 255]);
        assert!(matches!(
            estimate_stain_profile::<f64>(&patch, DEFAULT_BETA, DEFAULT_ALPHA),
            Err(Error::InsufficientTissue { stained: 0, .. })
        ));
    }

    #[test]
    fn single_stain_is_degenerate() {
        let h = unit3(HE_REFERENCE_H);
        let mut px = Vec::new();
        for i in 0..64 * 64 {
            let c = 0.3 + 1.2 * ((i * 37) % 101) as f64 / 100.0;
            for k in 0..3 {
                px.push((256.0 * 10f64.powf(-h[k] * c) - 1.0).round().clamp(0.0, 255.0) as u8);
            }
        }
        let patch = Patch::from_pixels(64, 64, px, 0.5);
        assert!(matches!(
            estimate_stain_profile::<f64>(&patch, DEFAULT_BETA, DEFAULT_ALPHA),
            Err(Error::DegenerateStain(_))
        ));
    }

    #[test]
    fn shuffle_and_scale_invariance() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let patch = he_mixture_patch(HE_REFERENCE_H, HE_REFERENCE_E, 96, 5, 1.0);
        let base = estimate_stain_profile::<f64>(&patch, DEFAULT_BETA, DEFAULT_ALPHA).unwrap();

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let mut pixels: Vec<[u8; 3]> = patch.pixels.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        pixels.shuffle(&mut rng);
        let shuffled = Patch::from_pixels(96, 96, pixels.concat(), patch.mpp);
        let s = estimate_stain_profile::<f64>(&shuffled, DEFAULT_BETA, DEFAULT_ALPHA).unwrap();

        let scaled = he_mixture_patch(HE_REFERENCE_H, HE_REFERENCE_E, 96, 5, 1.3);
        let c = estimate_stain_profile::<f64>(&scaled, DEFAULT_BETA, DEFAULT_ALPHA).unwrap();
        for k in 0..2 {
            assert!(angular_distance_deg(base.column(k), s.column(k)) < 0.5);
            assert!(angular_distance_deg(base.column(k), c.column(k)) < 0.5);
        }
    }

    fn mae(a: &[u8], b: &[u8]) -> f64 {
        a.iter().zip(b).map(|(&x, &y)| (x as f64 - y as f64).abs()).sum::<f64>() / a.len() as f64
    }

    #[test]
    fn self_normalization_is_near_identity() {
        let patch = he_mixture_patch(HE_REFERENCE_H, HE_REFERENCE_E, 128, 21, 1.0);
        let reference = estimate_stain_profile::<f64>(&patch, DEFAULT_BETA, DEFAULT_ALPHA).unwrap();
        let out = normalize_patch(&patch, &reference);
        assert_eq!(out.outcome, NormalizeOutcome::Normalized);
        assert_eq!((out.patch.width, out.patch.height), (128, 128));
        assert!(mae(&out.patch.pixels, &patch.pixels) <= 3.0);
    }

    #[test]
    fn different_stains_same_concentrations_converge() {
        let reference_patch = he_mixture_patch(HE_REFERENCE_H, HE_REFERENCE_E, 128, 4, 1.0);
        let reference = estimate_stain_profile::<f64>(&reference_patch, DEFAULT_BETA, DEFAULT_ALPHA).unwrap();
        let a = he_mixture_patch([0.55, 0.76, 0.34], [0.10, 0.95, 0.20], 128, 8, 1.0);
        let b = he_mixture_patch([0.70, 0.62, 0.35], [0.18, 0.92, 0.22], 128, 8, 1.0);
        let na = normalize_patch(&a, &reference);
        let nb = normalize_patch(&b, &reference);
        assert!(!na.passed_through() && !nb.passed_through());
        let d = mae(&na.patch.pixels, &nb.patch.pixels);
        assert!(d <= 3.0, "mae {d}");
    }

    #[test]
    fn white_patch_passes_through() {
        let reference = estimate_stain_profile::<f64>(
            &he_mixture_patch(HE_REFERENCE_H, HE_REFERENCE_E, 64, 1, 1.0),
            DEFAULT_BETA,
            DEFAULT_ALPHA,
        )
        .unwrap();
        let white = Patch::filled(32, [255, 255, 255]);
        let out = normalize_patch(&white, &reference);
        assert!(out.passed_through());
        assert_eq!(out.patch, white);
    }
}
