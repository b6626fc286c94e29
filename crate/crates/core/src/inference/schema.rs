use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Tolerance on the sum of a probability vector.
pub const PROB_TOLERANCE: f64 = 1e-6;

/// Classification task and its ordered label set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Tumor2,
    Subtype3,
    G4binary,
    Grade3,
}

impl Task {
    pub fn labels(self) -> &'static [&'static str] {
        match self {
            Task::Tumor2 => &["non_tumor", "tumor"],
            Task::Subtype3 => &["ccRCC", "pRCC", "chRCC"],
            Task::G4binary => &["non_g4", "g4"],
            Task::Grade3 => &["G1", "G2", "G3"],
        }
    }

    pub fn arity(self) -> usize {
        self.labels().len()
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Tumor2 => "tumor2",
            Task::Subtype3 => "subtype3",
            Task::G4binary => "g4binary",
            Task::Grade3 => "grade3",
        }
    }

    pub fn label_index(self, label: &str) -> Option<usize> {
        self.labels().iter().position(|l| *l == label)
    }
}

/// A validated probability vector over a task's labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelProbs {
    pub task: Task,
    pub values: Vec<f64>,
    /// Backend output drifted outside the simplex and was clamped and
    /// renormalized.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub renormalized: bool,
}

impl LabelProbs {
    /// Strict constructor: values must already be a probability vector.
    pub fn new(task: Task, values: Vec<f64>) -> Result<Self> {
        if values.len() != task.arity() {
            return Err(Error::SchemaMismatch(format!(
                "{} expects {} values, got {}",
                task.name(),
                task.arity(),
                values.len()
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!("probabilities outside [0, 1]: {values:?}")));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {sum}")));
        }
        Ok(Self { task, values, renormalized: false })
    }

    /// Accepts raw backend output, clamping to [0, 1] and renormalizing when
    /// it drifts beyond tolerance.
    pub fn from_backend(task: Task, values: Vec<f64>) -> Result<Self> {
        if values.len() != task.arity() {
            return Err(Error::SchemaMismatch(format!(
                "backend produced {} values for {} (arity {})",
                values.len(),
                task.name(),
                task.arity()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Backend(format!("non-finite output {values:?}")));
        }
        let sum: f64 = values.iter().sum();
        let in_range = values.iter().all(|v| (0.0..=1.0).contains(v));
        if in_range && (sum - 1.0).abs() <= PROB_TOLERANCE {
            return Ok(Self { task, values, renormalized: false });
        }
        let clamped: Vec<f64> = values.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let total: f64 = clamped.iter().sum();
        if total <= 0.0 {
            return Err(Error::Backend(format!("output {values:?} cannot be renormalized")));
        }
        Ok(Self { task, values: clamped.iter().map(|v| v / total).collect(), renormalized: true })
    }

    pub fn get(&self, label: usize) -> f64 {
        self.values[label]
    }

    /// Probability of the positive class for binary tasks.
    pub fn positive(&self) -> f64 {
        debug_assert_eq!(self.values.len(), 2);
        self.values[1]
    }
}

/// Max-subtracted softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Result<Vec<T>> {
    if logits.is_empty() {
        return Err(Error::invalid("softmax of empty vector"));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("softmax input must be finite"));
    }
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum = exps.iter().copied().fold(T::zero(), |a, b| a + b);
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Index of the maximum; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn argmax_label(probs: &LabelProbs) -> usize {
    argmax(&probs.values)
}
