//! Configuration, case manifests and end-to-end orchestration.

mod config;
mod manifest;
mod run;

pub use config::{
    load_config, DetectionConfig, ModelsConfig, PathsConfig, PipelineConfig, RegionConfig, ReportConfig, RunConfig,
    ThresholdsConfig, TissueConfig,
};
pub use manifest::{load_manifest, parse_manifest, CaseManifest, SlideEntry};
pub use run::{
    detect_stage, grade_stage, ingest_key, obtain_pyramid, region_stage, report_stage, run_pipeline, run_slide,
    run_slide_stage, subtype_stage, Models, PipelineContext, RunOptions, RunSummary, RunTotals, SlideOutput,
    SlideResults, SlideStats, SlideStatus, SlideSummary, Stage, GRADE_FILE, PATCHES_FILE, RUN_LOG_FILE,
    RUN_SUMMARY_FILE, SUBTYPE_FILE, TUMOR_MAP_FILE,
};
