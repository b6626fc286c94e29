//! Heatmap overlays and the whole-case report.

mod case;
mod heatmap;

pub use case::{
    build_case_report, serialize_report, CaseInfo, CaseReport, DetectionStats, GradeComparison, GroundTruthComparison,
    Provenance, ReportFormat, ReportInputs, SlideInfo, SubtypeComparison, SCHEMA_VERSION,
};
pub use heatmap::{label_color, probability_color, render_heatmap, HeatmapMode, DEFAULT_ALPHA, LABEL_PALETTE};
