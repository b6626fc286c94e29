use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{argmax, Classifier, InputPrep, Task};
use crate::slide::{PatchCoordinate, SlidePyramid};

/// A patch is flagged G4 when its G4 probability reaches this value.
pub const DEFAULT_G4_THRESHOLD: f64 = 0.5;
/// G4 patch fraction at which the slide is graded 4 regardless of the rest.
pub const DEFAULT_G4_OVERRIDE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeRecord {
    pub coord: PatchCoordinate,
    pub p_g4: f64,
    /// G1–G3 probabilities, kept only for non-G4 patches.
    pub grade3: Option<[f64; 3]>,
}

impl GradeRecord {
    pub fn is_g4(&self) -> bool {
        self.grade3.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeSummary {
    pub patch_count: usize,
    pub g4_count: usize,
    pub g4_fraction: f64,
    pub mean_probs_g123: [f64; 3],
    pub grade_percentages: [f64; 4],
    pub slide_grade: u8,
}

/// G4 dichotomy on every region patch, then the three-way grade for the
/// patches that are not G4. Output follows `region` order.
pub fn grade_patches(
    pyramid: &SlidePyramid,
    region: &[PatchCoordinate],
    g4_handle: &Classifier,
    grade3_handle: &Classifier,
    prep: &InputPrep,
    g4_threshold: f64,
) -> Result<Vec<GradeRecord>> {
    if region.is_empty() {
        return Err(Error::NoTumorDetected);
    }
    for (h, want) in [(g4_handle, Task::G4binary), (grade3_handle, Task::Grade3)] {
        if h.task != want {
            return Err(Error::SchemaMismatch(format!("grade stage needs a {} classifier, got {}", want.name(), h.task.name())));
        }
    }
    region
        .par_iter()
        .map(|coord| {
            let raw = pyramid.read_region(coord)?;
            let (input, _) = prep.prepare(&raw, g4_handle);
            let p_g4 = g4_handle.predict(&input)?.positive();
            let grade3 = if p_g4 >= g4_threshold {
                None
            } else {
                let (input, _) = prep.prepare(&raw, grade3_handle);
                let v = grade3_handle.predict(&input)?.values;
                Some([v[0], v[1], v[2]])
            };
            Ok(GradeRecord { coord: *coord, p_g4, grade3 })
        })
        .collect()
}

/// Pools grade evidence over the whole tumor region.
///
/// Records are summed in coordinate order, so any permutation of the input
/// gives the same summary.
pub fn aggregate_grade(records: &[GradeRecord], g4_override: f64) -> Result<GradeSummary> {
    if records.is_empty() {
        return Err(Error::invalid("no grade records to aggregate"));
    }
    let mut sorted: Vec<&GradeRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        a.coord.raster_key().cmp(&b.coord.raster_key()).then_with(|| {
            let key = |r: &GradeRecord| r.grade3.map(|v| v.map(f64::to_bits));
            key(a).cmp(&key(b))
        })
    });
    let n = records.len();
    let mut g4_count = 0usize;
    let mut sum = [0f64; 3];
    for r in sorted {
        match r.grade3 {
            None => g4_count += 1,
            Some(v) => {
                for k in 0..3 {
                    sum[k] += v[k];
                }
            }
        }
    }
    let g4_fraction = g4_count as f64 / n as f64;
    let rest = n - g4_count;
    let mean = if rest == 0 { [0.0; 3] } else { sum.map(|s| s / rest as f64) };
    let scale = 1.0 - g4_fraction;
    let raw = [mean[0] * scale, mean[1] * scale, mean[2] * scale, g4_fraction];
    let total: f64 = raw.iter().sum();
    let grade_percentages = raw.map(|x| x / total);
    let slide_grade = if g4_fraction >= g4_override { 4 } else { 1 + argmax(&mean) as u8 };
    Ok(GradeSummary { patch_count: n, g4_count, g4_fraction, mean_probs_g123: mean, grade_percentages, slide_grade })
}
