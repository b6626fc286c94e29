use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::ClassifierSource;
use crate::report::DEFAULT_ALPHA;
use crate::slide::{DEFAULT_MIN_TISSUE_FRACTION, DEFAULT_OD_THRESHOLD};
use crate::diagnosis::{DEFAULT_G4_OVERRIDE, DEFAULT_G4_THRESHOLD, DEFAULT_REGION_OVERLAP};
use crate::triage::TriageConfig;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Output root; the command line may override it.
    pub output: Option<PathBuf>,
    /// Ingested pyramid cache; defaults to `<output>/pyramids`.
    pub cache: Option<PathBuf>,
    /// Reference stain profile JSON. Without it patches are not normalized.
    pub stain_reference: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsConfig {
    pub tumor: Option<ClassifierSource>,
    /// Used by the magnification strategy; falls back to `tumor`.
    pub tumor_magnified: Option<ClassifierSource>,
    pub subtype: Option<ClassifierSource>,
    pub g4: Option<ClassifierSource>,
    pub grade3: Option<ClassifierSource>,
}

impl ModelsConfig {
    fn entries_mut(&mut self) -> [(&'static str, &mut Option<ClassifierSource>); 5] {
        [
            ("tumor", &mut self.tumor),
            ("tumor_magnified", &mut self.tumor_magnified),
            ("subtype", &mut self.subtype),
            ("g4", &mut self.g4),
            ("grade3", &mut self.grade3),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    pub patch_size: u32,
    pub magnification: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self { patch_size: 512, magnification: 20.0 }
    }
}

/// Grid shared by the subtype and grade stages inside the tumor region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    pub patch_size: u32,
    pub magnification: f64,
    /// Share of a region patch that must be covered by tumor detections.
    pub min_overlap: f64,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self { patch_size: 1000, magnification: 40.0, min_overlap: DEFAULT_REGION_OVERLAP }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdsConfig {
    pub od_threshold: f64,
    pub min_tissue_fraction: f64,
    pub g4_threshold: f64,
    pub g4_override: f64,
}

impl Default for ThresholdsConfig {
    fn default() -> Self {
        Self {
            od_threshold: DEFAULT_OD_THRESHOLD,
            min_tissue_fraction: DEFAULT_MIN_TISSUE_FRACTION,
            g4_threshold: DEFAULT_G4_THRESHOLD,
            g4_override: DEFAULT_G4_OVERRIDE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TissueConfig {
    /// Mask level relative to the detection level, clamped to the coarsest.
    pub level_offset: usize,
    /// Mask cell side in mask-level pixels.
    pub stride: u32,
}

impl Default for TissueConfig {
    fn default() -> Self {
        Self { level_offset: 2, stride: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub heatmap_alpha: f64,
    /// Stamp the wall-clock time into reports. Off by default so reruns are
    /// byte-identical.
    pub timestamp: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { heatmap_alpha: DEFAULT_ALPHA, timestamp: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub seed: u64,
    pub tile_size: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { workers: 0, seed: 0, tile_size: 512 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub models: ModelsConfig,
    pub detection: DetectionConfig,
    pub region: RegionConfig,
    pub triage: TriageConfig,
    pub thresholds: ThresholdsConfig,
    pub tissue: TissueConfig,
    pub report: ReportConfig,
    pub run: RunConfig,
}

fn field(ok: bool, name: &str, value: impl std::fmt::Display, rule: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {value}: {rule}")))
    }
}

fn absolutize(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    /// Parses TOML, or JSON when `is_json`. Unknown keys are rejected.
    pub fn parse(text: &str, is_json: bool) -> Result<Self> {
        if is_json {
            serde_json::from_str(text).map_err(|e| Error::Config(format!("JSON parse error: {e}")))
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
        }
    }

    /// Makes every relative path relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.paths.output, &mut self.paths.cache, &mut self.paths.stain_reference].into_iter().flatten() {
            absolutize(base, p);
        }
        for (_, m) in self.models.entries_mut() {
            if let Some(src) = m.take() {
                *m = Some(src.resolved(base));
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.detection;
        field(d.patch_size > 0, "detection.patch_size", d.patch_size, "must be positive")?;
        field(d.magnification > 0.0, "detection.magnification", d.magnification, "must be positive")?;
        let r = &self.region;
        field(r.patch_size > 0, "region.patch_size", r.patch_size, "must be positive")?;
        field(r.magnification > 0.0, "region.magnification", r.magnification, "must be positive")?;
        field(r.min_overlap > 0.0 && r.min_overlap <= 1.0, "region.min_overlap", r.min_overlap, "must be in (0, 1]")?;
        self.triage.validate()?;
        let t = &self.thresholds;
        field(t.od_threshold > 0.0 && t.od_threshold < 3.0, "thresholds.od_threshold", t.od_threshold, "must be in (0, 3)")?;
        field((0.0..=1.0).contains(&t.min_tissue_fraction), "thresholds.min_tissue_fraction", t.min_tissue_fraction, "must be in [0, 1]")?;
        field((0.0..=1.0).contains(&t.g4_threshold), "thresholds.g4_threshold", t.g4_threshold, "must be in [0, 1]")?;
        field(t.g4_override > 0.0 && t.g4_override <= 1.0, "thresholds.g4_override", t.g4_override, "must be in (0, 1]")?;
        field(self.tissue.stride > 0, "tissue.stride", self.tissue.stride, "must be positive")?;
        let a = self.report.heatmap_alpha;
        field((0.0..=1.0).contains(&a), "report.heatmap_alpha", a, "must be in [0, 1]")?;
        let ts = self.run.tile_size;
        field(ts >= 64 && ts.is_power_of_two(), "run.tile_size", ts, "must be a power of two >= 64")?;
        if let Some(p) = &self.paths.stain_reference {
            field(p.is_file(), "paths.stain_reference", p.display(), "file not found")?;
        }
        let mut models = self.models.clone();
        for (name, m) in models.entries_mut() {
            if let Some(p) = m.as_ref().and_then(|s| s.path()) {
                field(p.is_file(), &format!("models.{name}.path"), p.display(), "file not found")?;
            }
        }
        Ok(())
    }

    /// Digest of the settings that affect results. Worker count and file
    /// locations are excluded; model and stain files carry their own digests.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.run.workers = 0;
        c.paths = PathsConfig::default();
        let mut value = serde_json::to_value(&c).expect("config serializes");
        if let Some(models) = value.get_mut("models").and_then(|m| m.as_object_mut()) {
            for m in models.values_mut().filter_map(|m| m.as_object_mut()) {
                m.remove("path");
            }
        }
        crate::inference::digest_bytes(&serde_json::to_vec(&value).expect("value serializes"))
    }
}

/// Reads, resolves and validates a TOML (or `.json`) config file.
pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let text = fs::read_to_string(path).map_err(|e| match Error::io(path, e) {
        Error::NotFound(p) => Error::Config(format!("config file {} not found", p.display())),
        other => other,
    })?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let mut cfg = PipelineConfig::parse(&text, is_json).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    cfg.validate()?;
    Ok(cfg)
}
