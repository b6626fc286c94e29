use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{argmax, Classifier, InputPrep, Task};
use crate::slide::{PatchCoordinate, SlidePyramid};

/// Mean probabilities closer than this count as tied; it absorbs
/// summation-order rounding.
const MEAN_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtypeRecord {
    pub coord: PatchCoordinate,
    pub probs: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtypeShare {
    pub label: String,
    pub patch_count: usize,
    pub proportion: f64,
    /// mm²
    pub area: f64,
    /// Mean probability of this label over the patches it won.
    pub mean_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtypeSummary {
    pub tumor_patches: usize,
    pub labels: Vec<SubtypeShare>,
    pub slide_label: String,
    pub slide_confidence: f64,
}

/// Predicts and argmax-labels every tumor-region patch; output follows
/// `region` order.
pub fn classify_subtypes(
    pyramid: &SlidePyramid,
    region: &[PatchCoordinate],
    handle: &Classifier,
    prep: &InputPrep,
) -> Result<Vec<SubtypeRecord>> {
    if region.is_empty() {
        return Err(Error::NoTumorDetected);
    }
    if handle.task != Task::Subtype3 {
        return Err(Error::SchemaMismatch(format!("subtype stage needs a subtype3 classifier, got {}", handle.task.name())));
    }
    region
        .par_iter()
        .map(|coord| {
            let raw = pyramid.read_region(coord)?;
            let (input, _) = prep.prepare(&raw, handle);
            let probs = handle.predict(&input)?.values;
            Ok(SubtypeRecord { coord: *coord, label: argmax(&probs), probs })
        })
        .collect()
}

/// Slide-level subtype proportions. The slide label is the plurality label;
/// ties go to the higher mean winning probability, then the lowest index.
pub fn summarize_subtypes(records: &[SubtypeRecord], patch_area: f64) -> Result<SubtypeSummary> {
    if records.is_empty() {
        return Err(Error::NoTumorDetected);
    }
    let labels = Task::Subtype3.labels();
    let mut sorted: Vec<&SubtypeRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.coord.raster_key());
    let mut counts = vec![0usize; labels.len()];
    let mut sums = vec![0f64; labels.len()];
    for r in sorted {
        if r.label >= labels.len() {
            return Err(Error::invalid(format!("subtype label index {} out of range", r.label)));
        }
        counts[r.label] += 1;
        sums[r.label] += r.probs[r.label];
    }
    let n = records.len();
    let means: Vec<f64> = counts.iter().zip(&sums).map(|(&c, &s)| if c == 0 { 0.0 } else { s / c as f64 }).collect();
    let mut best = 0;
    for k in 1..labels.len() {
        if counts[k] > counts[best] || (counts[k] == counts[best] && means[k] > means[best] + MEAN_TIE_TOLERANCE) {
            best = k;
        }
    }
    Ok(SubtypeSummary {
        tumor_patches: n,
        labels: labels
            .iter()
            .enumerate()
            .map(|(k, l)| SubtypeShare {
                label: l.to_string(),
                patch_count: counts[k],
                proportion: counts[k] as f64 / n as f64,
                area: counts[k] as f64 * patch_area,
                mean_probability: means[k],
            })
            .collect(),
        slide_label: labels[best].to_string(),
        slide_confidence: means[best],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(i: i64, probs: [f64; 3]) -> SubtypeRecord {
        SubtypeRecord { coord: PatchCoordinate::new(0, i * 10, 0, 10), probs: probs.to_vec(), label: argmax(&probs) }
    }

    fn split(counts: [usize; 3]) -> Vec<SubtypeRecord> {
        let mut out = Vec::new();
        for (k, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                let mut p = [0.1; 3];
                p[k] = 0.8;
                out.push(rec(out.len() as i64, p));
            }
        }
        out
    }

    #[test]
    fn all_one_label() {
        let s = summarize_subtypes(&split([7, 0, 0]), 1.0).unwrap();
        assert_eq!(s.labels.iter().map(|l| l.proportion).collect::<Vec<_>>(), [1.0, 0.0, 0.0]);
        assert_eq!(s.slide_label, "ccRCC");
    }

    #[test]
    fn sixty_thirty_ten() {
        let s = summarize_subtypes(&split([60, 30, 10]), 0.5).unwrap();
        assert_eq!(s.labels.iter().map(|l| l.proportion).collect::<Vec<_>>(), [0.6, 0.3, 0.1]);
        assert_eq!(s.labels[1].area, 15.0);
        assert_eq!(s.slide_label, "ccRCC");
        assert_eq!(s.labels.iter().map(|l| l.patch_count).sum::<usize>(), 100);
    }

    #[test]
    fn tie_goes_to_confidence_then_index() {
        let mut r: Vec<_> = (0..5).map(|i| rec(i, [0.7, 0.2, 0.1])).collect();
        r.extend((5..10).map(|i| rec(i, [0.05, 0.9, 0.05])));
        let s = summarize_subtypes(&r, 1.0).unwrap();
        assert_eq!(s.slide_label, "pRCC");
        assert!((s.slide_confidence - 0.9).abs() < 1e-12);
        let mut r: Vec<_> = (0..2).map(|i| rec(i, [0.6, 0.3, 0.1])).collect();
        r.extend((2..4).map(|i| rec(i, [0.1, 0.3, 0.6])));
        assert_eq!(summarize_subtypes(&r, 1.0).unwrap().slide_label, "ccRCC");
    }

    #[test]
    fn order_independent() {
        let mut r = split([3, 4, 4]);
        for (i, x) in r.iter_mut().enumerate() {
            x.probs[x.label] = 0.5 + i as f64 * 0.013;
        }
        let a = summarize_subtypes(&r, 1.0).unwrap();
        r.reverse();
        assert_eq!(summarize_subtypes(&r, 1.0).unwrap(), a);
        assert!(matches!(summarize_subtypes(&[], 1.0), Err(Error::NoTumorDetected)));
    }
}
