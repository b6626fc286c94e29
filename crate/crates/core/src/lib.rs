//! Whole-slide image diagnostic engine for renal cell carcinoma.
//!
//! The pipeline tiles a slide into a pyramid, stain-normalizes patches,
//! detects tumor with a confidence-triggered ensemble, aggregates subtype and
//! ISUP grade over the tumor region and writes a whole-case report.

pub mod diagnosis;
pub mod error;
pub mod inference;
pub mod num;
pub mod pipeline;
pub mod report;
pub mod slide;
pub mod stain;
pub mod synthetic;
pub mod triage;

pub use error::{Error, Result};
pub use num::Scalar;

/// Stain profile in double precision, the default used by the pipeline.
pub type StainProfile = stain::StainProfile<f64>;
/// Single-precision stain profile for throughput-bound normalization.
pub type StainProfileF32 = stain::StainProfile<f32>;
/// Optical-density buffer in double precision.
pub type OdBuffer = Vec<[f64; 3]>;
