use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::classifier::{Backend, Normalization};
use super::onnx_meta::read_onnx_io;
use super::schema::Task;
use crate::error::{Error, Result};
use crate::slide::Patch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    #[default]
    Probabilities,
    /// Raw scores; softmax is applied after inference.
    Logits,
}

/// JSON sidecar that must accompany every model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSidecar {
    pub task: Task,
    pub input_size: u32,
    pub expected_mpp: f64,
    pub normalization: Normalization,
    #[serde(default)]
    pub output: OutputKind,
}

pub(crate) struct LoadedModel {
    pub sidecar: ModelSidecar,
    pub model_bytes: Vec<u8>,
    pub sidecar_bytes: Vec<u8>,
    pub backend: ModelBackend,
}

pub(crate) fn sidecar_path(model: &Path) -> std::path::PathBuf {
    model.with_extension("json")
}

/// Reads and checks a model and its sidecar. `expected` is compared with the
/// sidecar task before the network is built.
pub(crate) fn load_model_file(path: &Path, expected: Option<Task>) -> Result<LoadedModel> {
    let model_bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let sidecar_bytes = fs::read(&side).map_err(|e| Error::io(&side, e))?;
    let sidecar: ModelSidecar = serde_json::from_slice(&sidecar_bytes)
        .map_err(|e| Error::invalid(format!("model sidecar {}: {e}", side.display())))?;
    if sidecar.input_size == 0 || !(sidecar.expected_mpp > 0.0) {
        return Err(Error::invalid("sidecar input_size and expected_mpp must be positive"));
    }
    if let Some(expected) = expected.filter(|t| *t != sidecar.task) {
        return Err(Error::SchemaMismatch(format!(
            "descriptor expects {} but sidecar declares {}",
            expected.name(),
            sidecar.task.name()
        )));
    }
    let io = read_onnx_io(&model_bytes)?;
    let output = io
        .outputs
        .first()
        .ok_or_else(|| Error::SchemaMismatch("model declares no outputs".into()))?;
    match output.dims.last() {
        Some(Some(n)) if *n as usize == sidecar.task.arity() => {}
        other => {
            return Err(Error::SchemaMismatch(format!(
                "model output {:?} has {} classes, task {} needs {}",
                output.name,
                other.copied().flatten().map_or("unknown".to_string(), |n| n.to_string()),
                sidecar.task.name(),
                sidecar.task.arity()
            )))
        }
    }
    let backend = ModelBackend::new(&model_bytes, &sidecar)?;
    Ok(LoadedModel { sidecar, model_bytes, sidecar_bytes, backend })
}

#[cfg(feature = "onnx")]
mod runtime {
    use tract_onnx::prelude::*;

    use super::*;

    pub(crate) struct ModelBackend {
        plan: Arc<TypedRunnableModel>,
        input_size: usize,
        output: OutputKind,
    }

    fn backend_err(e: impl std::fmt::Display) -> Error {
        Error::Backend(e.to_string())
    }

    impl ModelBackend {
        pub(crate) fn new(bytes: &[u8], sidecar: &ModelSidecar) -> Result<Self> {
            let s = sidecar.input_size as usize;
            // tract panics on some malformed graphs instead of returning an error.
            let plan = std::panic::catch_unwind(|| {
                tract_onnx::onnx()
                    .model_for_read(&mut std::io::Cursor::new(bytes))
                    .and_then(|m| m.with_input_fact(0, f32::fact([1, 3, s, s]).into()))
                    .and_then(|m| m.into_optimized())
                    .and_then(|m| m.into_runnable())
            })
            .map_err(|_| Error::Backend("ONNX model graph is malformed".into()))?
            .map_err(backend_err)?;
            Ok(Self { plan, input_size: s, output: sidecar.output })
        }
    }

    impl Backend for ModelBackend {
        fn infer(&self, patch: &Patch) -> Result<Vec<f64>> {
            let s = self.input_size;
            let px = &patch.pixels;
            let input: Tensor = tract_ndarray::Array4::from_shape_fn((1, 3, s, s), |(_, c, y, x)| {
                px[(y * s + x) * 3 + c] as f32 / 255.0
            })
            .into();
            let out = self.plan.run(tvec!(input.into())).map_err(backend_err)?;
            let view = out[0].to_plain_array_view::<f32>().map_err(backend_err)?;
            let scores: Vec<f64> = view.iter().map(|&v| v as f64).collect();
            match self.output {
                OutputKind::Probabilities => Ok(scores),
                OutputKind::Logits => crate::inference::softmax(&scores),
            }
        }
    }
}

#[cfg(not(feature = "onnx"))]
mod runtime {
    use super::*;

    /// Placeholder used when the crate is built without the `onnx` feature:
    /// models load and validate, but inference reports a backend error.
    pub(crate) struct ModelBackend;

    impl ModelBackend {
        pub(crate) fn new(_bytes: &[u8], _sidecar: &ModelSidecar) -> Result<Self> {
            Ok(Self)
        }
    }

    impl Backend for ModelBackend {
        fn infer(&self, _patch: &Patch) -> Result<Vec<f64>> {
            Err(Error::Backend("ONNX inference requires building with the `onnx` feature".into()))
        }
    }
}

pub(crate) use runtime::ModelBackend;
