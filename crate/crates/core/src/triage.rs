//! Secondary validation of low-confidence tumor calls.
//!
//! A patch whose tumor probability falls strictly inside the band
//! `(low, high)` is re-examined three ways: the median over its eight
//! dihedral variants, a prediction at the next finer magnification centred
//! on the same point, and the mean over four diagonally offset context
//! patches. The final call is a majority vote of the available strategies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{Classifier, InputPrep};
use crate::num::median;
use crate::slide::{Patch, PatchCoordinate, SlidePyramid};

/// Context patches used by the neighbor strategy.
pub const NEIGHBOR_COUNT: usize = 4;

fn default_low() -> f64 {
    0.2
}
fn default_high() -> f64 {
    0.8
}
fn default_threshold() -> f64 {
    0.5
}
fn default_factor() -> u32 {
    2
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriageConfig {
    #[serde(default = "default_low")]
    pub low: f64,
    #[serde(default = "default_high")]
    pub high: f64,
    #[serde(default = "default_threshold")]
    pub decision_threshold: f64,
    /// Magnification ratio of the finer view; a power of two.
    #[serde(default = "default_factor")]
    pub magnification_factor: u32,
    #[serde(default = "yes")]
    pub rotation_flip: bool,
    #[serde(default = "yes")]
    pub magnification: bool,
    #[serde(default = "yes")]
    pub neighbor: bool,
}

impl Default for TriageConfig {
    fn default() -> Self {
        Self {
            low: default_low(),
            high: default_high(),
            decision_threshold: default_threshold(),
            magnification_factor: default_factor(),
            rotation_flip: true,
            magnification: true,
            neighbor: true,
        }
    }
}

impl TriageConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.low && self.low < self.decision_threshold && self.decision_threshold < self.high && self.high <= 1.0) {
            return Err(Error::Config(format!(
                "triage thresholds must satisfy 0 <= low < decision_threshold < high <= 1 (got {}, {}, {})",
                self.low, self.decision_threshold, self.high
            )));
        }
        if self.magnification_factor < 2 || !self.magnification_factor.is_power_of_two() {
            return Err(Error::Config(format!(
                "triage.magnification_factor must be a power of two >= 2, got {}",
                self.magnification_factor
            )));
        }
        Ok(())
    }

    pub fn decide(&self, p: f64) -> bool {
        p >= self.decision_threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Base,
    RotationFlip,
    Magnification,
    Neighbor,
    Vote,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub is_tumor: bool,
    pub probability: f64,
    pub provenance: Provenance,
}

impl Verdict {
    pub fn base(p: f64, cfg: &TriageConfig) -> Self {
        Verdict { is_tumor: cfg.decide(p), probability: p, provenance: Provenance::Base }
    }
}

/// True iff `p` lies strictly inside `(low, high)`.
pub fn needs_secondary(p_tumor: f64, cfg: &TriageConfig) -> bool {
    p_tumor > cfg.low && p_tumor < cfg.high
}

/// Elements of the symmetry group of the square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dihedral {
    Identity,
    /// Clockwise quarter turn.
    Rot90,
    Rot180,
    Rot270,
    /// Mirror left-right.
    FlipHorizontal,
    /// Mirror top-bottom.
    FlipVertical,
    /// Mirror across the main diagonal.
    Transpose,
    /// Mirror across the anti-diagonal.
    AntiTranspose,
}

impl Dihedral {
    pub const ALL: [Dihedral; 8] = [
        Dihedral::Identity,
        Dihedral::Rot90,
        Dihedral::Rot180,
        Dihedral::Rot270,
        Dihedral::FlipHorizontal,
        Dihedral::FlipVertical,
        Dihedral::Transpose,
        Dihedral::AntiTranspose,
    ];

    /// Destination of source pixel `(x, y)` in an `n × n` square.
    pub fn map(self, x: u32, y: u32, n: u32) -> (u32, u32) {
        let m = n - 1;
        match self {
            Dihedral::Identity => (x, y),
            Dihedral::Rot90 => (m - y, x),
            Dihedral::Rot180 => (m - x, m - y),
            Dihedral::Rot270 => (y, m - x),
            Dihedral::FlipHorizontal => (m - x, y),
            Dihedral::FlipVertical => (x, m - y),
            Dihedral::Transpose => (y, x),
            Dihedral::AntiTranspose => (m - y, m - x),
        }
    }

    pub fn apply(self, patch: &Patch) -> Result<Patch> {
        if patch.width != patch.height {
            return Err(Error::invalid(format!("dihedral transform needs a square patch, got {}x{}", patch.width, patch.height)));
        }
        let n = patch.width;
        let mut out = vec![0u8; patch.pixels.len()];
        for y in 0..n {
            for x in 0..n {
                let (dx, dy) = self.map(x, y, n);
                let s = (y as usize * n as usize + x as usize) * 3;
                let d = (dy as usize * n as usize + dx as usize) * 3;
                out[d..d + 3].copy_from_slice(&patch.pixels[s..s + 3]);
            }
        }
        Ok(Patch { pixels: out, ..patch.clone() })
    }
}

/// The patch and its seven rotations/reflections, identity first.
pub fn dihedral_variants(patch: &Patch) -> Result<Vec<Patch>> {
    Dihedral::ALL.iter().map(|t| t.apply(patch)).collect()
}

/// Median tumor probability over the eight dihedral variants of a prepared
/// classifier-input patch.
pub fn rotation_flip_verdict(handle: &Classifier, patch: &Patch, cfg: &TriageConfig) -> Result<Verdict> {
    let probs = dihedral_variants(patch)?
        .iter()
        .map(|v| handle.predict(v).map(|p| p.positive()))
        .collect::<Result<Vec<f64>>>()?;
    let m = median(&probs);
    Ok(Verdict { is_tumor: cfg.decide(m), probability: m, provenance: Provenance::RotationFlip })
}

/// Classifiers used by the secondary strategies.
#[derive(Clone, Copy)]
pub struct TriageHandles<'a> {
    pub base: &'a Classifier,
    /// Optional classifier trained for the finer magnification.
    pub magnified: Option<&'a Classifier>,
}

/// Top-left of a same-size patch one `factor` finer, sharing the centre of
/// `coord`. `None` when no such level exists.
pub fn finer_coordinate(coord: &PatchCoordinate, factor: u32) -> Option<PatchCoordinate> {
    let steps = factor.trailing_zeros() as usize;
    let level = coord.level.checked_sub(steps)?;
    let f = factor as i64;
    let s = coord.size as i64;
    // centre (x + s/2) scaled by f, minus half a patch
    let x = (2 * coord.x + s) * f / 2 - s / 2;
    let y = (2 * coord.y + s) * f / 2 - s / 2;
    Some(PatchCoordinate::new(level, x, y, coord.size))
}

pub fn magnification_verdict(
    handles: TriageHandles<'_>,
    pyramid: &SlidePyramid,
    coord: &PatchCoordinate,
    prep: &InputPrep,
    cfg: &TriageConfig,
) -> Result<Verdict> {
    let finer = finer_coordinate(coord, cfg.magnification_factor).ok_or_else(|| {
        Error::StrategyUnavailable(format!(
            "no level {}x finer than level {}",
            cfg.magnification_factor, coord.level
        ))
    })?;
    let handle = handles.magnified.unwrap_or(handles.base);
    let raw = pyramid.read_region(&finer)?;
    let (input, _) = prep.prepare(&raw, handle);
    let p = handle.predict(&input)?.positive();
    Ok(Verdict { is_tumor: cfg.decide(p), probability: p, provenance: Provenance::Magnification })
}

/// The four context patches: same size, centres offset by half a patch
/// diagonally from the centre of `coord`.
pub fn neighbor_coordinates(coord: &PatchCoordinate) -> [PatchCoordinate; NEIGHBOR_COUNT] {
    let h = coord.size as i64 / 2;
    [(-h, -h), (h, -h), (-h, h), (h, h)]
        .map(|(dx, dy)| PatchCoordinate::new(coord.level, coord.x + dx, coord.y + dy, coord.size))
}

pub fn neighbor_verdict(
    handle: &Classifier,
    pyramid: &SlidePyramid,
    coord: &PatchCoordinate,
    prep: &InputPrep,
    cfg: &TriageConfig,
) -> Result<Verdict> {
    let level = pyramid.level(coord.level)?;
    let (cx, cy) = coord.center();
    if cx < 0.0 || cy < 0.0 || cx >= level.width() as f64 || cy >= level.height() as f64 {
        return Err(Error::invalid("patch centre lies outside the level"));
    }
    let mut sum = 0.0;
    for n in neighbor_coordinates(coord) {
        let raw = pyramid.read_region(&n)?;
        let (input, _) = prep.prepare(&raw, handle);
        sum += handle.predict(&input)?.positive();
    }
    let mean = sum / NEIGHBOR_COUNT as f64;
    Ok(Verdict { is_tumor: cfg.decide(mean), probability: mean, provenance: Provenance::Neighbor })
}

fn fallback_rank(p: Provenance) -> u8 {
    match p {
        Provenance::RotationFlip => 0,
        Provenance::Magnification => 1,
        Provenance::Neighbor => 2,
        Provenance::Base | Provenance::Vote => 3,
    }
}

/// Majority vote over strategy verdicts; `None` marks an unavailable
/// strategy. Two valid verdicts that disagree defer to rotation/flip (then
/// magnification, then neighbor). The vote's probability is the mean of the
/// statistics on the winning side.
pub fn majority_vote(outcomes: &[Option<Verdict>]) -> Result<Verdict> {
    let mut valid: Vec<Verdict> = outcomes.iter().flatten().copied().collect();
    if valid.len() < 2 {
        return Err(Error::TriageFailed { valid: valid.len() });
    }
    valid.sort_by_key(|v| fallback_rank(v.provenance));
    let tumor = valid.iter().filter(|v| v.is_tumor).count();
    let non = valid.len() - tumor;
    let decision = if tumor != non { tumor > non } else { valid[0].is_tumor };
    let side: Vec<f64> = valid.iter().filter(|v| v.is_tumor == decision).map(|v| v.probability).collect();
    let probability = side.iter().sum::<f64>() / side.len() as f64;
    Ok(Verdict { is_tumor: decision, probability, provenance: Provenance::Vote })
}

/// Per-patch record of a triage decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageAudit {
    pub coord: PatchCoordinate,
    pub base_p: f64,
    pub rotation_flip: Option<f64>,
    pub magnification: Option<f64>,
    pub neighbor: Option<f64>,
    pub verdict: Verdict,
    /// Strategies that could not run, with the reason.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unavailable: Vec<String>,
}

/// Runs every enabled strategy on one band-interior patch and votes.
///
/// `input` is the base patch already prepared for `handles.base`. When fewer
/// than two strategies produce a verdict the base verdict is kept.
pub fn secondary_verdict(
    handles: TriageHandles<'_>,
    pyramid: &SlidePyramid,
    coord: &PatchCoordinate,
    input: &Patch,
    base_p: f64,
    prep: &InputPrep,
    cfg: &TriageConfig,
) -> Result<TriageAudit> {
    let mut unavailable = Vec::new();
    let mut run = |enabled: bool, name: &str, f: &dyn Fn() -> Result<Verdict>| -> Result<Option<Verdict>> {
        if !enabled {
            unavailable.push(format!("{name}: disabled"));
            return Ok(None);
        }
        match f() {
            Ok(v) => Ok(Some(v)),
            Err(Error::StrategyUnavailable(why)) => {
                unavailable.push(format!("{name}: {why}"));
                Ok(None)
            }
            Err(e) => Err(e),
        }
    };
    let rot = run(cfg.rotation_flip, "rotation_flip", &|| rotation_flip_verdict(handles.base, input, cfg))?;
    let mag = run(cfg.magnification, "magnification", &|| magnification_verdict(handles, pyramid, coord, prep, cfg))?;
    let nbr = run(cfg.neighbor, "neighbor", &|| neighbor_verdict(handles.base, pyramid, coord, prep, cfg))?;
    let verdict = match majority_vote(&[rot, mag, nbr]) {
        Ok(v) => v,
        Err(Error::TriageFailed { .. }) => Verdict::base(base_p, cfg),
        Err(e) => return Err(e),
    };
    Ok(TriageAudit {
        coord: *coord,
        base_p,
        rotation_flip: rot.map(|v| v.probability),
        magnification: mag.map(|v| v.probability),
        neighbor: nbr.map(|v| v.probability),
        verdict,
        unavailable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{load_classifier, ClassifierSource, Normalization, StubSpec, Task};
    use crate::inference::{write_lookup_table, LookupEntry};
    use crate::slide::{ingest_base_image, RgbRaster};

    fn cfg() -> TriageConfig {
        TriageConfig::default()
    }

    fn v(is_tumor: bool, p: f64, provenance: Provenance) -> Option<Verdict> {
        Some(Verdict { is_tumor, probability: p, provenance })
    }

    #[test]
    fn band_rule_examples() {
        assert!(needs_secondary(0.5, &cfg()));
        assert!(!needs_secondary(0.95, &cfg()));
        assert!(!needs_secondary(0.2, &cfg()));
        assert!(!needs_secondary(0.8, &cfg()));
        assert!(!needs_secondary(0.1, &cfg()));
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        let bad = TriageConfig { low: 0.9, high: 0.8, ..cfg() };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = TriageConfig { magnification_factor: 3, ..cfg() };
        assert!(bad.validate().is_err());
    }

    fn labeled(n: u32) -> Patch {
        Patch::from_pixels(n, n, (0..n * n).flat_map(|i| [i as u8, (i >> 8) as u8, 7]).collect(), 1.0)
    }

    #[test]
    fn rotation_moves_top_left_to_top_right() {
        let p = labeled(3);
        let r = Dihedral::Rot90.apply(&p).unwrap();
        assert_eq!(r.pixel(2, 0), p.pixel(0, 0));
        // full index map on the labeled 3×3 grid
        for y in 0..3 {
            for x in 0..3 {
                assert_eq!(r.pixel(2 - y, x), p.pixel(x, y));
            }
        }
    }

    #[test]
    fn group_laws() {
        let p = labeled(5);
        let mut r = p.clone();
        for _ in 0..4 {
            r = Dihedral::Rot90.apply(&r).unwrap();
        }
        assert_eq!(r.pixels, p.pixels);
        for t in [Dihedral::FlipHorizontal, Dihedral::FlipVertical, Dihedral::Transpose, Dihedral::AntiTranspose] {
            assert_eq!(t.apply(&t.apply(&p).unwrap()).unwrap().pixels, p.pixels);
        }
        let variants = dihedral_variants(&p).unwrap();
        assert_eq!(variants.len(), 8);
        for i in 0..8 {
            for j in i + 1..8 {
                assert_ne!(variants[i].pixels, variants[j].pixels, "variants {i} and {j} coincide");
            }
        }
        let c = Patch::filled(4, [9, 8, 7]);
        assert!(dihedral_variants(&c).unwrap().iter().all(|q| q.pixels == c.pixels));
        let rect = Patch::from_pixels(2, 3, vec![0; 18], 1.0);
        assert!(matches!(dihedral_variants(&rect), Err(Error::InvalidInput(_))));
    }

    struct Fixed(Vec<f64>, std::sync::atomic::AtomicUsize);
    impl crate::inference::Backend for Fixed {
        fn infer(&self, _: &Patch) -> Result<Vec<f64>> {
            let i = self.1.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            let p = self.0[i % self.0.len()];
            Ok(vec![1.0 - p, p])
        }
    }

    fn sequence_classifier(ps: &[f64]) -> Classifier {
        Classifier::from_backend(Task::Tumor2, 4, Normalization::None, "seq", Box::new(Fixed(ps.to_vec(), 0.into())))
    }

    #[test]
    fn rotation_flip_medians() {
        let patch = Patch::filled(4, [1, 2, 3]);
        let c = sequence_classifier(&[0.1, 0.1, 0.1, 0.1, 0.9, 0.9, 0.9, 0.9]);
        let v = rotation_flip_verdict(&c, &patch, &cfg()).unwrap();
        assert_eq!(v.probability, 0.5);
        assert!(v.is_tumor);
        let c = sequence_classifier(&[0.1, 0.2, 0.3, 0.4, 0.45, 0.9, 0.9, 0.9]);
        let v = rotation_flip_verdict(&c, &patch, &cfg()).unwrap();
        assert!((v.probability - 0.425).abs() < 1e-12);
        assert!(!v.is_tumor);
        let c = sequence_classifier(&[0.6]);
        let v = rotation_flip_verdict(&c, &patch, &cfg()).unwrap();
        assert_eq!((v.probability, v.is_tumor), (0.6, true));
    }

    #[test]
    fn votes() {
        use Provenance::*;
        let t = |a, b, c| majority_vote(&[a, b, c]).unwrap();
        assert!(t(v(true, 0.6, RotationFlip), v(true, 0.7, Magnification), v(false, 0.1, Neighbor)).is_tumor);
        assert!(!t(v(false, 0.4, RotationFlip), v(false, 0.3, Magnification), v(true, 0.9, Neighbor)).is_tumor);
        let fb = t(v(true, 0.6, RotationFlip), None, v(false, 0.2, Neighbor));
        assert!(fb.is_tumor);
        assert_eq!(fb.probability, 0.6);
        assert_eq!(fb.provenance, Vote);
        let fb = t(v(false, 0.3, Magnification), None, v(true, 0.8, Neighbor));
        assert!(!fb.is_tumor);
        assert!(matches!(majority_vote(&[v(true, 0.6, RotationFlip), None, None]), Err(Error::TriageFailed { valid: 1 })));
        let m = t(v(true, 0.6, RotationFlip), v(true, 0.7, Magnification), v(false, 0.1, Neighbor));
        assert!((m.probability - 0.65).abs() < 1e-12);
    }

    #[test]
    fn vote_is_permutation_invariant() {
        use Provenance::*;
        let sets = [
            [v(true, 0.6, RotationFlip), v(false, 0.3, Magnification), v(true, 0.55, Neighbor)],
            [v(true, 0.6, RotationFlip), None, v(false, 0.2, Neighbor)],
            [None, v(true, 0.9, Magnification), v(false, 0.2, Neighbor)],
        ];
        for set in sets {
            let base = majority_vote(&set).unwrap();
            for perm in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                let shuffled = perm.map(|i| set[i]);
                assert_eq!(majority_vote(&shuffled).unwrap(), base);
            }
        }
    }

    #[test]
    fn finer_coordinate_keeps_centre() {
        let c = PatchCoordinate::new(2, 100, 40, 64);
        let f = finer_coordinate(&c, 2).unwrap();
        assert_eq!(f, PatchCoordinate::new(1, 2 * 100 + 32, 2 * 40 + 32, 64));
        let (cx, cy) = c.center();
        let (fx, fy) = f.center();
        assert_eq!((fx, fy), (cx * 2.0, cy * 2.0));
        let f4 = finer_coordinate(&c, 4).unwrap();
        assert_eq!(f4.level, 0);
        assert_eq!(f4.center(), (cx * 4.0, cy * 4.0));
        assert!(finer_coordinate(&PatchCoordinate::new(0, 0, 0, 64), 2).is_none());
    }

    #[test]
    fn magnification_on_labeled_pyramid() {
        // level 0 left half red, right half blue; the level-1 patch straddles
        // both but its finer view lies entirely in the red half
        let img = RgbRaster::from_fn(512, 256, |x, _| if x < 200 { [250, 10, 10] } else { [10, 10, 250] });
        let p = ingest_base_image(img, 0.25, 40.0, 128).unwrap();
        let red = load_classifier(&ClassifierSource::ProceduralStub {
            task: Task::Tumor2,
            input_size: 32,
            expected_mpp: None,
            normalization: Normalization::None,
            stub: StubSpec::MeanRedThreshold { threshold: 128.0, p_high: 0.98 },
        })
        .unwrap();
        let handles = TriageHandles { base: &red, magnified: None };
        let coord = PatchCoordinate::new(1, 16, 0, 96);
        let v = magnification_verdict(handles, &p, &coord, &InputPrep::default(), &cfg()).unwrap();
        assert!(v.is_tumor);
        assert_eq!(v.probability, 0.98);
        let base = PatchCoordinate::new(0, 0, 0, 96);
        assert!(matches!(
            magnification_verdict(handles, &p, &base, &InputPrep::default(), &cfg()),
            Err(Error::StrategyUnavailable(_))
        ));
    }

    fn lookup(dir: &std::path::Path, entries: &[LookupEntry], size: u32, default: Option<Vec<f64>>) -> Classifier {
        let path = dir.join(format!("lookup{}.jsonl", entries.len()));
        write_lookup_table(&path, entries).unwrap();
        load_classifier(&ClassifierSource::LookupTable { path, task: Task::Tumor2, input_size: size, expected_mpp: None, default })
            .unwrap()
    }

    #[test]
    fn neighbor_mean_from_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let p = ingest_base_image(RgbRaster::filled(256, 256, [120, 60, 140]), 0.5, 20.0, 128).unwrap();
        let coord = PatchCoordinate::new(0, 64, 64, 64);
        let ns = neighbor_coordinates(&coord);
        assert_eq!(ns.map(|c| (c.x, c.y)), [(32, 32), (96, 32), (32, 96), (96, 96)]);
        let vals = [0.9, 0.9, 0.9, 0.1];
        let entries: Vec<_> = ns
            .iter()
            .zip(vals)
            .map(|(c, p)| LookupEntry { level: 0, x: c.x, y: c.y, values: vec![1.0 - p, p] })
            .collect();
        let c = lookup(dir.path(), &entries, 64, None);
        let v = neighbor_verdict(&c, &p, &coord, &InputPrep::default(), &cfg()).unwrap();
        assert!((v.probability - 0.7).abs() < 1e-12);
        assert!(v.is_tumor);

        let half = lookup(dir.path(), &[], 64, Some(vec![0.5, 0.5]));
        let v = neighbor_verdict(&half, &p, &coord, &InputPrep::default(), &cfg()).unwrap();
        assert_eq!(v.probability, 0.5);
        assert!(v.is_tumor);
    }

    #[test]
    fn neighbor_on_uniform_texture_matches_base() {
        let p = ingest_base_image(RgbRaster::filled(256, 256, [120, 60, 140]), 0.5, 20.0, 128).unwrap();
        let stub = load_classifier(&ClassifierSource::ProceduralStub {
            task: Task::Tumor2,
            input_size: 64,
            expected_mpp: None,
            normalization: Normalization::None,
            stub: StubSpec::MeanIntensity,
        })
        .unwrap();
        let coord = PatchCoordinate::new(0, 96, 96, 64);
        let base = stub.predict(&p.read_region(&coord).unwrap()).unwrap().positive();
        let v = neighbor_verdict(&stub, &p, &coord, &InputPrep::default(), &cfg()).unwrap();
        assert!((v.probability - base).abs() < 1e-12);
    }

    #[test]
    fn secondary_verdict_degrades_without_finer_level() {
        let dir = tempfile::tempdir().unwrap();
        let p = ingest_base_image(RgbRaster::filled(256, 256, [120, 60, 140]), 0.5, 20.0, 128).unwrap();
        let coord = PatchCoordinate::new(0, 64, 64, 64);
        let c = lookup(dir.path(), &[LookupEntry { level: 0, x: 64, y: 64, values: vec![0.4, 0.6] }], 64, Some(vec![0.95, 0.05]));
        let input = p.read_region(&coord).unwrap();
        let audit = secondary_verdict(
            TriageHandles { base: &c, magnified: None },
            &p,
            &coord,
            &input,
            0.6,
            &InputPrep::default(),
            &cfg(),
        )
        .unwrap();
        assert_eq!(audit.rotation_flip, Some(0.6));
        assert_eq!(audit.magnification, None);
        assert_eq!(audit.neighbor, Some(0.05));
        // rotation says tumor, neighbor says not: rotation wins the tie
        assert!(audit.verdict.is_tumor);
        assert_eq!(audit.unavailable.len(), 1);
    }
}
