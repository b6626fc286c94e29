use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnosis::{GradeSummary, SlideMetrics, SubtypeSummary};
use crate::error::{Error, Result};
use crate::slide::GroundTruth;

pub const SCHEMA_VERSION: u32 = 1;

const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseInfo {
    pub case_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionStats {
    pub level: usize,
    pub patch_size: u32,
    pub grid_patches: usize,
    pub triaged_patches: usize,
    pub trigger_rate: f64,
    pub normalization_passthrough: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlideInfo {
    pub slide_id: String,
    pub width: u32,
    pub height: u32,
    pub mpp: f64,
    pub magnification: f64,
    pub detection: DetectionStats,
    /// Conditions a reviewer should look at, e.g. `no_tissue`.
    #[serde(default)]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub engine_version: String,
    pub config_digest: String,
    /// Classifier role to version digest.
    pub models: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stain_reference: Option<String>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtypeComparison {
    pub reference: String,
    pub predicted: Option<String>,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeComparison {
    pub reference: u8,
    pub predicted: Option<u8>,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthComparison {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtype: Option<SubtypeComparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isup_grade: Option<GradeComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub schema_version: u32,
    pub case: CaseInfo,
    pub slide: SlideInfo,
    pub metrics: SlideMetrics,
    /// Absent when no tumor region was found.
    pub subtype: Option<SubtypeSummary>,
    pub grade: Option<GradeSummary>,
    /// Artifact name to path relative to the report directory.
    pub artifacts: BTreeMap<String, String>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_comparison: Option<GroundTruthComparison>,
}

pub struct ReportInputs {
    pub case: CaseInfo,
    pub slide: SlideInfo,
    pub metrics: SlideMetrics,
    pub subtype: Option<SubtypeSummary>,
    pub grade: Option<GradeSummary>,
    pub artifacts: BTreeMap<String, String>,
    /// Directory the artifact paths are relative to.
    pub artifact_root: Option<std::path::PathBuf>,
    pub provenance: Provenance,
    pub ground_truth: Option<GroundTruth>,
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::ReportInconsistent(what()))
    }
}

fn check_metrics(m: &SlideMetrics) -> Result<()> {
    check(m.tumor_patches <= m.tissue_patches, || {
        format!("tumor patches ({}) exceed tissue patches ({})", m.tumor_patches, m.tissue_patches)
    })?;
    check(m.tissue_area >= 0.0 && m.tumor_area >= 0.0 && m.tumor_area <= m.tissue_area, || {
        format!("tumor_area {} must lie in [0, tissue_area {}]", m.tumor_area, m.tissue_area)
    })?;
    let expected = if m.tissue_patches == 0 { 0.0 } else { m.tumor_patches as f64 / m.tissue_patches as f64 };
    check((m.tumor_fraction - expected).abs() <= SUM_TOLERANCE, || {
        format!("tumor_fraction {} disagrees with patch counts ({expected})", m.tumor_fraction)
    })
}

fn check_subtype(s: &SubtypeSummary, m: &SlideMetrics) -> Result<()> {
    check(m.tumor_patches > 0, || "subtype summary present but no tumor patches detected".into())?;
    let counted: usize = s.labels.iter().map(|l| l.patch_count).sum();
    check(counted == s.tumor_patches, || {
        format!("subtype counts sum to {counted} but the tumor region has {} patches", s.tumor_patches)
    })?;
    let total: f64 = s.labels.iter().map(|l| l.proportion).sum();
    check((total - 1.0).abs() <= SUM_TOLERANCE, || format!("subtype proportions sum to {total}"))?;
    check(s.labels.iter().any(|l| l.label == s.slide_label), || format!("unknown slide subtype {}", s.slide_label))
}

fn check_grade(g: &GradeSummary, s: Option<&SubtypeSummary>) -> Result<()> {
    check((1..=4).contains(&g.slide_grade), || format!("slide grade {} outside 1-4", g.slide_grade))?;
    check(g.g4_count <= g.patch_count, || format!("g4 count {} exceeds patch count {}", g.g4_count, g.patch_count))?;
    let total: f64 = g.grade_percentages.iter().sum();
    check((total - 1.0).abs() <= SUM_TOLERANCE, || format!("grade percentages sum to {total}"))?;
    if let Some(s) = s {
        check(s.tumor_patches == g.patch_count, || {
            format!("grade covers {} patches but subtype covers {}", g.patch_count, s.tumor_patches)
        })?;
    }
    Ok(())
}

/// Assembles a report after cross-checking every section; fails naming the
/// violated constraint instead of emitting inconsistent numbers.
pub fn build_case_report(inputs: ReportInputs) -> Result<CaseReport> {
    check_metrics(&inputs.metrics)?;
    if let Some(s) = &inputs.subtype {
        check_subtype(s, &inputs.metrics)?;
    }
    if let Some(g) = &inputs.grade {
        check(inputs.metrics.tumor_patches > 0, || "grade summary present but no tumor patches detected".into())?;
        check_grade(g, inputs.subtype.as_ref())?;
    }
    check(inputs.slide.detection.grid_patches == inputs.metrics.tissue_patches, || {
        format!(
            "detection grid has {} patches but metrics count {}",
            inputs.slide.detection.grid_patches, inputs.metrics.tissue_patches
        )
    })?;
    if let Some(root) = &inputs.artifact_root {
        for (name, rel) in &inputs.artifacts {
            check(root.join(rel).is_file(), || format!("artifact {name} missing at {}", root.join(rel).display()))?;
        }
    }
    let ground_truth_comparison = inputs.ground_truth.as_ref().and_then(|gt| {
        let subtype = gt.subtype.as_ref().map(|reference| {
            let predicted = inputs.subtype.as_ref().map(|s| s.slide_label.clone());
            SubtypeComparison { agrees: predicted.as_deref() == Some(reference.as_str()), reference: reference.clone(), predicted }
        });
        let isup_grade = gt.isup_grade.map(|reference| {
            let predicted = inputs.grade.as_ref().map(|g| g.slide_grade);
            GradeComparison { reference, predicted, agrees: predicted == Some(reference) }
        });
        (subtype.is_some() || isup_grade.is_some()).then_some(GroundTruthComparison { subtype, isup_grade })
    });
    Ok(CaseReport {
        schema_version: SCHEMA_VERSION,
        case: inputs.case,
        slide: inputs.slide,
        metrics: inputs.metrics,
        subtype: inputs.subtype,
        grade: inputs.grade,
        artifacts: inputs.artifacts,
        provenance: inputs.provenance,
        ground_truth_comparison,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

/// Canonical JSON (sorted keys, shortest round-trip floats) or the
/// fixed-template text summary.
pub fn serialize_report(report: &CaseReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let value = serde_json::to_value(report).expect("report is always representable as JSON");
            let mut out = serde_json::to_vec_pretty(&value).expect("JSON value serializes");
            out.push(b'\n');
            out
        }
        ReportFormat::Text => text(report).into_bytes(),
    }
}

impl CaseReport {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, format) in [("report.json", ReportFormat::Json), ("report.txt", ReportFormat::Text)] {
            let path = dir.join(name);
            std::fs::write(&path, serialize_report(self, format)).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn pct(x: f64) -> String {
    format!("{:.1}%", x * 100.0)
}

fn text(r: &CaseReport) -> String {
    let mut s = String::new();
    let m = &r.metrics;
    let d = &r.slide.detection;
    let _ = writeln!(s, "Whole-case report");
    let _ = writeln!(s, "Case: {}", r.case.case_id);
    let _ = writeln!(s, "Slide: {} ({}x{} px, {} um/px)", r.slide.slide_id, r.slide.width, r.slide.height, r.slide.mpp);
    let _ = writeln!(s, "Tissue area: {:.3} mm2", m.tissue_area);
    let _ = writeln!(s, "Tumor area: {:.3} mm2", m.tumor_area);
    let _ = writeln!(s, "Tumor proportion: {}", pct(m.tumor_fraction));
    let _ = writeln!(s, "Patches: {} tissue, {} tumor, {} triaged ({})", m.tissue_patches, m.tumor_patches, d.triaged_patches, pct(d.trigger_rate));
    match &r.subtype {
        Some(st) => {
            let _ = writeln!(s, "Subtype: {} (mean probability {:.3})", st.slide_label, st.slide_confidence);
            for l in &st.labels {
                let _ = writeln!(s, "  {}: {} ({} patches, {:.3} mm2)", l.label, pct(l.proportion), l.patch_count, l.area);
            }
        }
        None => {
            let _ = writeln!(s, "Subtype: not assessed");
        }
    }
    match &r.grade {
        Some(g) => {
            let _ = writeln!(s, "ISUP grade: {}", g.slide_grade);
            let [g1, g2, g3, g4] = g.grade_percentages;
            let _ = writeln!(s, "  G1: {}  G2: {}  G3: {}  G4: {}", pct(g1), pct(g2), pct(g3), pct(g4));
        }
        None => {
            let _ = writeln!(s, "ISUP grade: not assessed");
        }
    }
    if let Some(c) = &r.ground_truth_comparison {
        if let Some(st) = &c.subtype {
            let _ = writeln!(
                s,
                "Reference subtype: {} (predicted {}, {})",
                st.reference,
                st.predicted.as_deref().unwrap_or("none"),
                if st.agrees { "agrees" } else { "differs" }
            );
        }
        if let Some(g) = &c.isup_grade {
            let pred = g.predicted.map_or("none".to_string(), |p| p.to_string());
            let _ = writeln!(s, "Reference ISUP grade: {} (predicted {pred}, {})", g.reference, if g.agrees { "agrees" } else { "differs" });
        }
    }
    if !r.slide.flags.is_empty() {
        let _ = writeln!(s, "Flags: {}", r.slide.flags.join(", "));
    }
    s
}
