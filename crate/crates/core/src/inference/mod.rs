//! Patch classifiers behind one handle type.
//!
//! Three backends share the [`Classifier`] contract: serialized networks in
//! ONNX format with a JSON sidecar, coordinate-keyed lookup tables used as
//! test oracles, and small procedural stubs.

mod classifier;
mod lookup;
mod model;
mod onnx_meta;
mod prep;
mod schema;
mod stub;

pub use classifier::{digest_bytes, load_classifier, Backend, BackendKind, Classifier, ClassifierSource, Normalization};
pub use lookup::{parse_lookup_table, write_lookup_table, LookupEntry};
pub use model::{ModelSidecar, OutputKind};
pub use prep::InputPrep;
pub use onnx_meta::{read_onnx_io, OnnxIo, TensorInfo};
pub use schema::{argmax, argmax_label, softmax, LabelProbs, Task, PROB_TOLERANCE};
pub use stub::StubSpec;
