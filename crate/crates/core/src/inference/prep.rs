use super::Classifier;
use crate::slide::Patch;
use crate::stain::{normalize_patch, StainProfile};

/// Turns raw slide patches into classifier input: Macenko normalization
/// against the reference profile when the classifier asks for it, then a
/// bilinear resample to the classifier's input size.
#[derive(Debug, Clone, Default)]
pub struct InputPrep {
    pub reference: Option<StainProfile<f64>>,
}

impl InputPrep {
    pub fn new(reference: Option<StainProfile<f64>>) -> Self {
        Self { reference }
    }

    /// Returns the prepared patch and whether normalization fell back to
    /// pass-through.
    pub fn prepare(&self, patch: &Patch, classifier: &Classifier) -> (Patch, bool) {
        let mut passthrough = false;
        let normalized;
        let source = match (&self.reference, classifier.wants_normalization()) {
            (Some(reference), true) => {
                let out = normalize_patch(patch, reference);
                passthrough = out.passed_through();
                normalized = out.patch;
                &normalized
            }
            _ => patch,
        };
        (source.resized(classifier.input_size), passthrough)
    }
}
