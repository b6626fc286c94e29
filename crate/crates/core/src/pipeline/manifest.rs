use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::Task;
use crate::slide::GroundTruth;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlideEntry {
    pub image: PathBuf,
    pub mpp: f64,
    pub magnification: f64,
    /// Defaults to the image file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slide_id: Option<String>,
}

impl SlideEntry {
    pub fn id(&self) -> String {
        self.slide_id.clone().unwrap_or_else(|| {
            self.image.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "slide".into())
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseManifest {
    pub case_id: String,
    /// Cohort tag, e.g. a public portal or a local hospital cohort.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<GroundTruth>,
    pub slides: Vec<SlideEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Cohort {
    cases: Vec<CaseManifest>,
}

fn safe_id(kind: &str, id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id != "."
        && id != ".."
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("{kind} {id:?} must be non-empty and use only letters, digits, '-', '_' or '.'")))
    }
}

impl CaseManifest {
    pub fn validate(&self) -> Result<()> {
        safe_id("case_id", &self.case_id)?;
        if self.slides.is_empty() {
            return Err(Error::Config(format!("case {} lists no slides", self.case_id)));
        }
        if let Some(l) = &self.labels {
            if let Some(s) = &l.subtype {
                if Task::Subtype3.label_index(s).is_none() {
                    return Err(Error::Config(format!(
                        "case {}: subtype label {s:?} not one of {:?}",
                        self.case_id,
                        Task::Subtype3.labels()
                    )));
                }
            }
            if let Some(g) = l.isup_grade {
                if !(1..=4).contains(&g) {
                    return Err(Error::Config(format!("case {}: isup_grade {g} outside 1-4", self.case_id)));
                }
            }
        }
        let mut seen = BTreeSet::new();
        for s in &self.slides {
            let id = s.id();
            safe_id("slide_id", &id)?;
            if !seen.insert(id.clone()) {
                return Err(Error::Config(format!("case {}: duplicate slide_id {id}", self.case_id)));
            }
            if !(s.mpp > 0.0 && s.magnification > 0.0) {
                return Err(Error::Config(format!("case {} slide {id}: mpp and magnification must be positive", self.case_id)));
            }
        }
        Ok(())
    }

    fn resolve(&mut self, base: &Path) {
        for s in &mut self.slides {
            if s.image.is_relative() {
                s.image = base.join(&s.image);
            }
        }
    }
}

/// Parses a manifest holding one case object or `{"cases": [...]}`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<CaseManifest>> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("manifest JSON parse error: {e}")))?;
    let mut cases = if value.get("cases").is_some() {
        serde_json::from_value::<Cohort>(value).map(|c| c.cases)
    } else {
        serde_json::from_value::<CaseManifest>(value).map(|c| vec![c])
    }
    .map_err(|e| Error::Config(format!("manifest: {e}")))?;
    if cases.is_empty() {
        return Err(Error::Config("manifest lists no cases".into()));
    }
    let mut ids = BTreeSet::new();
    for c in &mut cases {
        c.validate()?;
        if !ids.insert(c.case_id.clone()) {
            return Err(Error::Config(format!("duplicate case_id {}", c.case_id)));
        }
        c.resolve(base);
    }
    Ok(cases)
}

pub fn load_manifest(path: &Path) -> Result<Vec<CaseManifest>> {
    let text = fs::read_to_string(path).map_err(|e| match Error::io(path, e) {
        Error::NotFound(p) => Error::Config(format!("manifest {} not found", p.display())),
        other => other,
    })?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new(".")))
}
