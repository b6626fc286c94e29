use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::lookup::LookupBackend;
use super::model::{load_model_file, ModelBackend};
use super::schema::{LabelProbs, Task};
use super::stub::StubSpec;
use crate::error::{Error, Result};
use crate::slide::Patch;

/// Whether a classifier expects stain-normalized input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    None,
    Macenko,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    ModelFile,
    LookupTable,
    ProceduralStub,
}

/// Descriptor naming where a classifier comes from. Relative paths are
/// resolved by the caller (the config loader resolves them against the
/// config file's directory).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierSource {
    /// ONNX network; the sidecar lives next to it with a `.json` extension.
    ModelFile {
        path: PathBuf,
        /// Task the caller expects; must match the sidecar when given.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        task: Option<Task>,
    },
    LookupTable {
        path: PathBuf,
        task: Task,
        input_size: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expected_mpp: Option<f64>,
        /// Returned for coordinates absent from the table.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        default: Option<Vec<f64>>,
    },
    ProceduralStub {
        task: Task,
        input_size: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expected_mpp: Option<f64>,
        #[serde(default)]
        normalization: Normalization,
        stub: StubSpec,
    },
}

impl ClassifierSource {
    /// Resolves relative paths against `base`.
    pub fn resolved(mut self, base: &Path) -> Self {
        match &mut self {
            ClassifierSource::ModelFile { path, .. } | ClassifierSource::LookupTable { path, .. } => {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
            ClassifierSource::ProceduralStub { .. } => {}
        }
        self
    }

    pub fn path(&self) -> Option<&Path> {
        match self {
            ClassifierSource::ModelFile { path, .. } | ClassifierSource::LookupTable { path, .. } => Some(path),
            ClassifierSource::ProceduralStub { .. } => None,
        }
    }
}

/// Raw inference behind a classifier handle. Implementations must be safe
/// to call from many threads at once.
pub trait Backend: Send + Sync {
    /// Unvalidated class scores for one patch.
    fn infer(&self, patch: &Patch) -> Result<Vec<f64>>;
}

/// Immutable, shareable patch classifier.
pub struct Classifier {
    pub task: Task,
    pub input_size: u32,
    pub expected_mpp: Option<f64>,
    pub normalization: Normalization,
    pub kind: BackendKind,
    /// SHA-256 of the bytes that define the classifier.
    pub version: String,
    backend: Box<dyn Backend>,
}

impl std::fmt::Debug for Classifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Classifier")
            .field("task", &self.task)
            .field("input_size", &self.input_size)
            .field("kind", &self.kind)
            .field("version", &self.version)
            .finish_non_exhaustive()
    }
}

pub(crate) fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

/// Hex SHA-256 of a byte string.
pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

impl Classifier {
    /// Wraps a custom backend.
    pub fn from_backend(
        task: Task,
        input_size: u32,
        normalization: Normalization,
        version: impl Into<String>,
        backend: Box<dyn Backend>,
    ) -> Self {
        Self {
            task,
            input_size,
            expected_mpp: None,
            normalization,
            kind: BackendKind::ProceduralStub,
            version: version.into(),
            backend,
        }
    }

    /// Classifies one patch of exactly `input_size × input_size` pixels.
    pub fn predict(&self, patch: &Patch) -> Result<LabelProbs> {
        if patch.width != self.input_size || patch.height != self.input_size {
            return Err(Error::invalid(format!(
                "patch is {}x{}, classifier expects {}x{}",
                patch.width, patch.height, self.input_size, self.input_size
            )));
        }
        let raw = self.backend.infer(patch)?;
        LabelProbs::from_backend(self.task, raw)
    }

    pub fn wants_normalization(&self) -> bool {
        self.normalization == Normalization::Macenko && self.kind != BackendKind::LookupTable
    }
}

pub fn load_classifier(source: &ClassifierSource) -> Result<Classifier> {
    match source {
        ClassifierSource::ModelFile { path, task } => {
            let loaded = load_model_file(path, *task)?;
            let version = digest(&[&loaded.model_bytes, &loaded.sidecar_bytes]);
            let backend: ModelBackend = loaded.backend;
            Ok(Classifier {
                task: loaded.sidecar.task,
                input_size: loaded.sidecar.input_size,
                expected_mpp: Some(loaded.sidecar.expected_mpp),
                normalization: loaded.sidecar.normalization,
                kind: BackendKind::ModelFile,
                version,
                backend: Box::new(backend),
            })
        }
        ClassifierSource::LookupTable { path, task, input_size, expected_mpp, default } => {
            let bytes = read(path)?;
            let backend = LookupBackend::from_bytes(&bytes, *task, default.clone())?;
            let default_bytes = serde_json::to_vec(default)?;
            Ok(Classifier {
                task: *task,
                input_size: *input_size,
                expected_mpp: *expected_mpp,
                normalization: Normalization::None,
                kind: BackendKind::LookupTable,
                version: digest(&[task.name().as_bytes(), &bytes, &default_bytes]),
                backend: Box::new(backend),
            })
        }
        ClassifierSource::ProceduralStub { task, input_size, expected_mpp, normalization, stub } => {
            stub.check(*task)?;
            let spec_bytes = serde_json::to_vec(source)?;
            Ok(Classifier {
                task: *task,
                input_size: *input_size,
                expected_mpp: *expected_mpp,
                normalization: *normalization,
                kind: BackendKind::ProceduralStub,
                version: digest(&[&spec_bytes]),
                backend: Box::new(stub.clone()),
            })
        }
    }
}
