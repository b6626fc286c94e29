use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::PipelineConfig;
use super::manifest::{CaseManifest, SlideEntry};
use crate::diagnosis::{
    aggregate_grade, classify_subtypes, detect_tumor, grade_patches, patch_area_mm2, slide_metrics, summarize_subtypes,
    tumor_region_grid, GradeRecord, SubtypeRecord, TumorMap,
};
use crate::error::{Error, Result};
use crate::inference::{argmax, digest_bytes, load_classifier, Classifier, ClassifierSource, InputPrep, Task};
use crate::report::{
    build_case_report, render_heatmap, CaseInfo, CaseReport, DetectionStats, HeatmapMode, Provenance, ReportInputs,
    SlideInfo,
};
use crate::slide::{
    decode_flat_image, grid_patches, ingest_base_image, open_pyramid, save_pyramid, tissue_mask, PatchCoordinate,
    SlidePyramid, MANIFEST_FILE,
};
use crate::stain::StainProfile;
use crate::triage::TriageHandles;

pub const TUMOR_MAP_FILE: &str = "tumor_map.json";
pub const SUBTYPE_FILE: &str = "subtype_records.json";
pub const GRADE_FILE: &str = "grade_records.json";
pub const PATCHES_FILE: &str = "patches.jsonl";
pub const RUN_LOG_FILE: &str = "run_log.jsonl";
pub const RUN_SUMMARY_FILE: &str = "run_summary.json";

/// Classifiers named in the config, loaded once and shared by all slides.
#[derive(Debug, Default)]
pub struct Models {
    pub tumor: Option<Classifier>,
    pub tumor_magnified: Option<Classifier>,
    pub subtype: Option<Classifier>,
    pub g4: Option<Classifier>,
    pub grade3: Option<Classifier>,
}

fn load_role(role: &str, src: &Option<ClassifierSource>, task: Task) -> Result<Option<Classifier>> {
    let Some(src) = src else { return Ok(None) };
    let c = load_classifier(src)?;
    if c.task != task {
        return Err(Error::Config(format!("models.{role} must be a {} classifier, got {}", task.name(), c.task.name())));
    }
    Ok(Some(c))
}

/// Everything a slide run needs besides the slide itself.
#[derive(Debug)]
pub struct PipelineContext {
    pub config: PipelineConfig,
    pub models: Models,
    pub prep: InputPrep,
    pub config_digest: String,
    pub stain_digest: Option<String>,
}

impl PipelineContext {
    pub fn load(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let m = &config.models;
        let models = Models {
            tumor: load_role("tumor", &m.tumor, Task::Tumor2)?,
            tumor_magnified: load_role("tumor_magnified", &m.tumor_magnified, Task::Tumor2)?,
            subtype: load_role("subtype", &m.subtype, Task::Subtype3)?,
            g4: load_role("g4", &m.g4, Task::G4binary)?,
            grade3: load_role("grade3", &m.grade3, Task::Grade3)?,
        };
        let (reference, stain_digest) = match &config.paths.stain_reference {
            Some(p) => {
                let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
                let text = String::from_utf8(bytes.clone())
                    .map_err(|_| Error::Config(format!("stain reference {} is not UTF-8", p.display())))?;
                (Some(StainProfile::<f64>::from_json(&text)?), Some(digest_bytes(&bytes)))
            }
            None => (None, None),
        };
        let config_digest = config.digest();
        Ok(Self { prep: InputPrep::new(reference), models, config, config_digest, stain_digest })
    }

    fn require<'a>(&self, role: &str, m: &'a Option<Classifier>) -> Result<&'a Classifier> {
        m.as_ref().ok_or_else(|| Error::Config(format!("models.{role} is required for this stage")))
    }

    pub fn grading_configured(&self) -> bool {
        self.models.g4.is_some() && self.models.grade3.is_some()
    }

    fn provenance(&self) -> Provenance {
        let m = &self.models;
        let models = [("tumor", &m.tumor), ("tumor_magnified", &m.tumor_magnified), ("subtype", &m.subtype), ("g4", &m.g4), ("grade3", &m.grade3)]
            .into_iter()
            .filter_map(|(k, c)| c.as_ref().map(|c| (k.to_string(), c.version.clone())))
            .collect();
        Provenance {
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest: self.config_digest.clone(),
            models,
            stain_reference: self.stain_digest.clone(),
            seed: self.config.run.seed,
            timestamp: self
                .config
                .report
                .timestamp
                .then(|| humantime::format_rfc3339_seconds(std::time::SystemTime::now()).to_string()),
        }
    }
}

fn level_for(pyramid: &SlidePyramid, magnification: f64, what: &str) -> Result<usize> {
    pyramid.level_for_magnification(magnification).ok_or_else(|| {
        Error::invalid(format!(
            "no {what} level at {magnification}x (slide base {}x, {} levels)",
            pyramid.magnification_base,
            pyramid.level_count()
        ))
    })
}

/// Tissue mask, detection grid and triaged tumor detection. A slide without
/// tissue yields an empty map.
pub fn detect_stage(pyramid: &SlidePyramid, ctx: &PipelineContext) -> Result<TumorMap> {
    let cfg = &ctx.config;
    let tumor = ctx.require("tumor", &ctx.models.tumor)?;
    let level = level_for(pyramid, cfg.detection.magnification, "detection")?;
    let mask_level = (level + cfg.tissue.level_offset).min(pyramid.level_count() - 1);
    let mask = tissue_mask(pyramid, mask_level, cfg.thresholds.od_threshold, cfg.tissue.stride)?;
    let grid = grid_patches(pyramid, pyramid.level_mpp(level), cfg.detection.patch_size, &mask, cfg.thresholds.min_tissue_fraction)?;
    if grid.is_empty() {
        return Ok(TumorMap {
            level,
            patch_size: cfg.detection.patch_size,
            mpp: pyramid.level_mpp(level),
            records: vec![],
            audits: vec![],
            normalization_passthrough: 0,
        });
    }
    let handles = TriageHandles { base: tumor, magnified: ctx.models.tumor_magnified.as_ref() };
    detect_tumor(pyramid, &grid, handles, &ctx.prep, &cfg.triage)
}

/// Region grid for subtype and grade.
pub fn region_stage(pyramid: &SlidePyramid, map: &TumorMap, ctx: &PipelineContext) -> Result<Vec<PatchCoordinate>> {
    let r = &ctx.config.region;
    let level = level_for(pyramid, r.magnification, "subtype/grade")?;
    tumor_region_grid(pyramid, map, level, r.patch_size, r.min_overlap)
}

pub fn subtype_stage(pyramid: &SlidePyramid, region: &[PatchCoordinate], ctx: &PipelineContext) -> Result<Vec<SubtypeRecord>> {
    let handle = ctx.require("subtype", &ctx.models.subtype)?;
    classify_subtypes(pyramid, region, handle, &ctx.prep)
}

pub fn grade_stage(pyramid: &SlidePyramid, region: &[PatchCoordinate], ctx: &PipelineContext) -> Result<Vec<GradeRecord>> {
    let g4 = ctx.require("g4", &ctx.models.g4)?;
    let g3 = ctx.require("grade3", &ctx.models.grade3)?;
    grade_patches(pyramid, region, g4, g3, &ctx.prep, ctx.config.thresholds.g4_threshold)
}

/// Stage outputs for one slide.
#[derive(Debug, Clone, Default)]
pub struct SlideResults {
    pub map: Option<TumorMap>,
    pub subtype: Option<Vec<SubtypeRecord>>,
    pub grade: Option<Vec<GradeRecord>>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let v = serde_json::to_value(value)?;
    let mut bytes = serde_json::to_vec_pretty(&v)?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Option<T>> {
    match fs::read(path) {
        Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(path, e)),
    }
}

impl SlideResults {
    pub fn load(dir: &Path) -> Result<Self> {
        Ok(Self {
            map: read_json(&dir.join(TUMOR_MAP_FILE))?,
            subtype: read_json(&dir.join(SUBTYPE_FILE))?,
            grade: read_json(&dir.join(GRADE_FILE))?,
        })
    }

    fn require_map(&self, dir: &Path) -> Result<&TumorMap> {
        self.map.as_ref().ok_or_else(|| Error::NotFound(dir.join(TUMOR_MAP_FILE)))
    }
}

fn jsonl_line(kind: &str, record: &impl Serialize) -> Result<Vec<u8>> {
    let mut v = serde_json::to_value(record)?;
    if let Value::Object(m) = &mut v {
        m.insert("kind".into(), Value::String(kind.into()));
    }
    let mut line = serde_json::to_vec(&v)?;
    line.push(b'\n');
    Ok(line)
}

/// Heatmaps, per-patch records and the case report, written into `dir`.
pub fn report_stage(
    pyramid: &SlidePyramid,
    results: &SlideResults,
    ctx: &PipelineContext,
    case: &CaseInfo,
    dir: &Path,
) -> Result<CaseReport> {
    let map = results.require_map(dir)?;
    let cfg = &ctx.config;
    let metrics = slide_metrics(map);
    let mut flags = Vec::new();
    if map.records.is_empty() {
        flags.push("no_tissue".to_string());
    } else if metrics.tumor_patches == 0 {
        flags.push("no_tumor_detected".to_string());
    }
    if map.normalization_passthrough > 0 {
        flags.push("stain_normalization_passthrough".to_string());
    }
    let tumor_present = metrics.tumor_patches > 0;
    if tumor_present && results.subtype.is_none() {
        flags.push("subtype_not_assessed".to_string());
    }
    if tumor_present && results.grade.is_none() {
        flags.push("grade_not_assessed".to_string());
    }
    let region_empty = |r: Option<usize>| r == Some(0);
    if tumor_present
        && (region_empty(results.subtype.as_ref().map(Vec::len)) || region_empty(results.grade.as_ref().map(Vec::len)))
    {
        flags.push("tumor_region_below_overlap".to_string());
    }
    let area_of = |c: &PatchCoordinate| patch_area_mm2(c.size, pyramid.level_mpp(c.level));
    let subtype = match results.subtype.as_deref() {
        Some([first, ..]) if tumor_present => Some(summarize_subtypes(results.subtype.as_ref().unwrap(), area_of(&first.coord))?),
        _ => None,
    };
    let grade = match results.grade.as_deref() {
        Some(records) if tumor_present && !records.is_empty() => Some(aggregate_grade(records, cfg.thresholds.g4_override)?),
        _ => None,
    };

    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let thumb = pyramid.thumbnail_level();
    let alpha = cfg.report.heatmap_alpha;
    let mut artifacts = BTreeMap::new();
    let mut save = |name: &str, file: &str, raster: crate::slide::RgbRaster| -> Result<()> {
        raster.save_png(&dir.join(file))?;
        artifacts.insert(name.to_string(), file.to_string());
        Ok(())
    };
    save("thumbnail", "thumbnail.png", pyramid.level(thumb)?.to_raster())?;
    let tumor_values: Vec<_> = map.records.iter().map(|r| (r.coord, r.p_tumor)).collect();
    save("tumor_heatmap", "tumor_heatmap.png", render_heatmap(&tumor_values, pyramid, thumb, HeatmapMode::Probability, alpha)?)?;
    if let (Some(records), Some(_)) = (&results.subtype, &subtype) {
        let values: Vec<_> = records.iter().map(|r| (r.coord, r.label as f64)).collect();
        save("subtype_heatmap", "subtype_heatmap.png", render_heatmap(&values, pyramid, thumb, HeatmapMode::Label, alpha)?)?;
    }
    if let (Some(records), Some(_)) = (&results.grade, &grade) {
        let values: Vec<_> = records
            .iter()
            .map(|r| (r.coord, r.grade3.map_or(3.0, |v| argmax(&v) as f64)))
            .collect();
        save("grade_heatmap", "grade_heatmap.png", render_heatmap(&values, pyramid, thumb, HeatmapMode::Label, alpha)?)?;
    }

    let mut lines = Vec::new();
    for r in &map.records {
        lines.extend(jsonl_line("tumor", r)?);
    }
    for r in results.subtype.iter().flatten() {
        lines.extend(jsonl_line("subtype", r)?);
    }
    for r in results.grade.iter().flatten() {
        lines.extend(jsonl_line("grade", r)?);
    }
    let patches = dir.join(PATCHES_FILE);
    fs::write(&patches, lines).map_err(|e| Error::io(&patches, e))?;
    artifacts.insert("patches".into(), PATCHES_FILE.into());

    let base = pyramid.level(0)?;
    let triaged = map.triaged_count();
    let slide = SlideInfo {
        slide_id: pyramid.slide_id.clone(),
        width: base.width(),
        height: base.height(),
        mpp: pyramid.mpp_base,
        magnification: pyramid.magnification_base,
        detection: DetectionStats {
            level: map.level,
            patch_size: map.patch_size,
            grid_patches: map.records.len(),
            triaged_patches: triaged,
            trigger_rate: if map.records.is_empty() { 0.0 } else { triaged as f64 / map.records.len() as f64 },
            normalization_passthrough: map.normalization_passthrough,
        },
        flags,
    };
    let report = build_case_report(ReportInputs {
        case: case.clone(),
        slide,
        metrics,
        subtype,
        grade,
        artifacts,
        artifact_root: Some(dir.to_path_buf()),
        provenance: ctx.provenance(),
        ground_truth: pyramid.ground_truth.clone(),
    })?;
    report.write_to(dir)?;
    Ok(report)
}

/// Which stages a command runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Detect,
    Subtype,
    Grade,
    Report,
    /// Every stage in order.
    Run,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Detect => "detect",
            Stage::Subtype => "subtype",
            Stage::Grade => "grade",
            Stage::Report => "report",
            Stage::Run => "run",
        }
    }
}

/// Per-slide bookkeeping returned alongside the report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SlideStats {
    pub grid_patches: usize,
    pub triaged_patches: usize,
    pub region_patches: usize,
    /// Stage name to wall-clock milliseconds.
    pub timings_ms: BTreeMap<String, f64>,
}

pub struct SlideOutput {
    pub report: Option<CaseReport>,
    pub stats: SlideStats,
    pub audits: Vec<crate::triage::TriageAudit>,
}

fn timed<T>(timings: &mut BTreeMap<String, f64>, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let t = Instant::now();
    let out = f();
    timings.insert(name.to_string(), t.elapsed().as_secs_f64() * 1000.0);
    out
}

/// Runs `stage` on an opened pyramid, persisting stage outputs in `dir`.
pub fn run_slide_stage(
    pyramid: &SlidePyramid,
    ctx: &PipelineContext,
    case: &CaseInfo,
    dir: &Path,
    stage: Stage,
) -> Result<SlideOutput> {
    let mut stats = SlideStats::default();
    let mut audits = Vec::new();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut results = if matches!(stage, Stage::Run | Stage::Detect) { SlideResults::default() } else { SlideResults::load(dir)? };
    let t = &mut stats.timings_ms;
    if matches!(stage, Stage::Run | Stage::Detect) {
        let map = timed(t, "detect", || detect_stage(pyramid, ctx))?;
        write_json(&dir.join(TUMOR_MAP_FILE), &map)?;
        audits = map.audits.clone();
        results.map = Some(map);
    }
    let map = match stage {
        Stage::Ingest => return Ok(SlideOutput { report: None, stats, audits }),
        _ => results.require_map(dir)?.clone(),
    };
    let run_subtype = stage == Stage::Subtype || (stage == Stage::Run && ctx.models.subtype.is_some());
    let run_grade = stage == Stage::Grade || (stage == Stage::Run && ctx.grading_configured());
    let region = if map.tumor_count() > 0 && (run_subtype || run_grade) {
        timed(t, "region", || region_stage(pyramid, &map, ctx))?
    } else {
        vec![]
    };
    if run_subtype {
        if stage == Stage::Subtype {
            ctx.require("subtype", &ctx.models.subtype)?;
        }
        let records = if region.is_empty() { vec![] } else { timed(t, "subtype", || subtype_stage(pyramid, &region, ctx))? };
        write_json(&dir.join(SUBTYPE_FILE), &records)?;
        results.subtype = Some(records);
    }
    if run_grade {
        if stage == Stage::Grade {
            ctx.require("g4", &ctx.models.g4)?;
            ctx.require("grade3", &ctx.models.grade3)?;
        }
        let records = if region.is_empty() { vec![] } else { timed(t, "grade", || grade_stage(pyramid, &region, ctx))? };
        write_json(&dir.join(GRADE_FILE), &records)?;
        results.grade = Some(records);
    }
    stats.grid_patches = map.records.len();
    stats.triaged_patches = map.triaged_count();
    stats.region_patches = region.len();
    let report = if matches!(stage, Stage::Run | Stage::Report) {
        let case = case.clone();
        Some(timed(&mut stats.timings_ms, "report", || report_stage(pyramid, &results, ctx, &case, dir))?)
    } else {
        None
    };
    Ok(SlideOutput { report, stats, audits })
}

/// All stages on an in-memory pyramid.
pub fn run_slide(pyramid: &SlidePyramid, ctx: &PipelineContext, case: &CaseInfo, dir: &Path) -> Result<(CaseReport, SlideStats)> {
    let out = run_slide_stage(pyramid, ctx, case, dir, Stage::Run)?;
    Ok((out.report.expect("run stage always reports"), out.stats))
}

/// Cache key of an ingested slide: image bytes plus every ingest parameter.
pub fn ingest_key(image_bytes: &[u8], case: &CaseManifest, slide: &SlideEntry, tile_size: u32) -> String {
    let params = serde_json::json!({
        "image": digest_bytes(image_bytes),
        "mpp": slide.mpp,
        "magnification": slide.magnification,
        "tile_size": tile_size,
        "case_id": case.case_id,
        "slide_id": slide.id(),
        "labels": case.labels,
    });
    digest_bytes(&serde_json::to_vec(&params).expect("json serializes"))
}

/// Opens the cached pyramid for a slide, ingesting it first when absent or
/// when `force` is set.
pub fn obtain_pyramid(
    case: &CaseManifest,
    slide: &SlideEntry,
    tile_size: u32,
    cache: &Path,
    force: bool,
) -> Result<(SlidePyramid, PathBuf)> {
    let bytes = fs::read(&slide.image).map_err(|e| Error::io(&slide.image, e))?;
    let key = ingest_key(&bytes, case, slide, tile_size);
    let dir = cache.join(&key);
    if !force && dir.join(MANIFEST_FILE).is_file() {
        match open_pyramid(&dir) {
            Ok(p) => return Ok((p, dir)),
            Err(e) => log::warn!("cached pyramid {} unreadable ({e}); re-ingesting", dir.display()),
        }
    }
    let raster = decode_flat_image(&bytes)?;
    drop(bytes);
    let pyramid = ingest_base_image(raster, slide.mpp, slide.magnification, tile_size)?
        .with_ids(case.case_id.clone(), slide.id())
        .with_ground_truth(case.labels.clone());
    let tmp = cache.join(format!(".tmp-{key}-{}", std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
    }
    save_pyramid(&pyramid, &tmp)?;
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    fs::rename(&tmp, &dir).map_err(|e| Error::io(&dir, e))?;
    Ok((pyramid, dir))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlideStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlideSummary {
    pub case_id: String,
    pub slide_id: String,
    pub status: SlideStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pyramid: Option<PathBuf>,
    #[serde(flatten)]
    pub stats: SlideStats,
    pub trigger_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTotals {
    pub slides: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub grid_patches: usize,
    pub triaged_patches: usize,
    pub trigger_rate: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub command: String,
    pub workers: usize,
    pub slides: Vec<SlideSummary>,
    pub totals: RunTotals,
}

impl RunSummary {
    pub fn all_ok(&self) -> bool {
        self.totals.failed == 0
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output: PathBuf,
    pub force_ingest: bool,
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

fn append_audits(path: &Path, case_id: &str, slide_id: &str, audits: &[crate::triage::TriageAudit]) -> Result<()> {
    if audits.is_empty() {
        return Ok(());
    }
    let mut buf = Vec::new();
    for a in audits {
        let mut v = serde_json::to_value(a)?;
        if let Value::Object(m) = &mut v {
            m.insert("case_id".into(), Value::String(case_id.into()));
            m.insert("slide_id".into(), Value::String(slide_id.into()));
        }
        buf.extend(serde_json::to_vec(&v)?);
        buf.push(b'\n');
    }
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Runs `stage` over every slide of every case. A failing slide is recorded
/// in the summary and the run moves on; reports land in
/// `<output>/<case_id>/<slide_id>/`.
pub fn run_pipeline(ctx: &PipelineContext, cases: &[CaseManifest], stage: Stage, opts: &RunOptions) -> Result<RunSummary> {
    let started = Instant::now();
    fs::create_dir_all(&opts.output).map_err(|e| Error::io(&opts.output, e))?;
    let cache = ctx.config.paths.cache.clone().unwrap_or_else(|| opts.output.join("pyramids"));
    fs::create_dir_all(&cache).map_err(|e| Error::io(&cache, e))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if ctx.config.run.workers > 0 {
        builder = builder.num_threads(ctx.config.run.workers);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let log_path = opts.output.join(RUN_LOG_FILE);
    let mut slides = Vec::new();
    for case in cases {
        let info = CaseInfo { case_id: case.case_id.clone(), source: case.source.clone() };
        for slide in &case.slides {
            let slide_id = slide.id();
            let dir = opts.output.join(&case.case_id).join(&slide_id);
            let mut pyramid_dir = None;
            let attempt = catch_unwind(AssertUnwindSafe(|| -> Result<SlideOutput> {
                let t = Instant::now();
                let (pyramid, pdir) = obtain_pyramid(case, slide, ctx.config.run.tile_size, &cache, opts.force_ingest)?;
                pyramid_dir = Some(pdir);
                let ingest_ms = t.elapsed().as_secs_f64() * 1000.0;
                let mut out = pool.install(|| run_slide_stage(&pyramid, ctx, &info, &dir, stage))?;
                out.stats.timings_ms.insert("ingest".into(), ingest_ms);
                Ok(out)
            }))
            .unwrap_or_else(|p| Err(Error::Backend(format!("slide processing panicked: {}", panic_message(p)))));
            let summary = match attempt {
                Ok(out) => {
                    append_audits(&log_path, &case.case_id, &slide_id, &out.audits)?;
                    let s = &out.stats;
                    let rate = if s.grid_patches == 0 { 0.0 } else { s.triaged_patches as f64 / s.grid_patches as f64 };
                    SlideSummary {
                        case_id: case.case_id.clone(),
                        slide_id,
                        status: SlideStatus::Ok,
                        error: None,
                        pyramid: pyramid_dir,
                        trigger_rate: rate,
                        stats: out.stats,
                    }
                }
                Err(e) => {
                    log::error!("case {} slide {slide_id}: {e}", case.case_id);
                    SlideSummary {
                        case_id: case.case_id.clone(),
                        slide_id,
                        status: SlideStatus::Failed,
                        error: Some(e.to_string()),
                        pyramid: pyramid_dir,
                        stats: SlideStats::default(),
                        trigger_rate: 0.0,
                    }
                }
            };
            slides.push(summary);
        }
    }
    let grid: usize = slides.iter().map(|s| s.stats.grid_patches).sum();
    let triaged: usize = slides.iter().map(|s| s.stats.triaged_patches).sum();
    let failed = slides.iter().filter(|s| s.status == SlideStatus::Failed).count();
    let summary = RunSummary {
        command: stage.name().into(),
        workers: pool.current_num_threads(),
        totals: RunTotals {
            slides: slides.len(),
            succeeded: slides.len() - failed,
            failed,
            grid_patches: grid,
            triaged_patches: triaged,
            trigger_rate: if grid == 0 { 0.0 } else { triaged as f64 / grid as f64 },
            elapsed_ms: started.elapsed().as_secs_f64() * 1000.0,
        },
        slides,
    };
    write_json(&opts.output.join(RUN_SUMMARY_FILE), &summary)?;
    Ok(summary)
}
