//! Slide-level diagnosis: tumor map and metrics, subtype proportions,
//! hierarchical grading, and annotator agreement.

mod grade;
mod kappa;
mod subtype;
mod tumor;

pub use grade::{aggregate_grade, grade_patches, GradeRecord, GradeSummary, DEFAULT_G4_OVERRIDE, DEFAULT_G4_THRESHOLD};
pub use kappa::cohens_kappa;
pub use subtype::{classify_subtypes, summarize_subtypes, SubtypeRecord, SubtypeShare, SubtypeSummary};
pub use tumor::{
    detect_tumor, patch_area_mm2, slide_metrics, tumor_region_grid, SlideMetrics, TumorMap, TumorRecord,
    DEFAULT_REGION_OVERLAP,
};
