use serde::{Deserialize, Serialize};

use super::classifier::Backend;
use super::schema::Task;
use crate::error::{Error, Result};
use crate::slide::Patch;

fn default_threshold() -> f64 {
    128.0
}

fn default_p_high() -> f64 {
    0.98
}

/// Procedural test classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StubSpec {
    /// Same vector for every patch.
    Constant { values: Vec<f64> },
    /// Binary: positive with `p_high` when the mean red channel reaches
    /// `threshold`, else `1 - p_high`.
    MeanRedThreshold {
        #[serde(default = "default_threshold")]
        threshold: f64,
        #[serde(default = "default_p_high")]
        p_high: f64,
    },
    /// Binary: positive probability is `1 - mean(RGB) / 255`, so darker
    /// (denser) patches score higher. Invariant under any pixel permutation.
    MeanIntensity,
}

impl StubSpec {
    pub(crate) fn check(&self, task: Task) -> Result<()> {
        match self {
            StubSpec::Constant { values } if values.len() != task.arity() => Err(Error::SchemaMismatch(format!(
                "constant stub has {} values, {} needs {}",
                values.len(),
                task.name(),
                task.arity()
            ))),
            StubSpec::MeanRedThreshold { p_high, .. } if !(0.0..=1.0).contains(p_high) => {
                Err(Error::invalid(format!("p_high {p_high} outside [0, 1]")))
            }
            StubSpec::MeanRedThreshold { .. } | StubSpec::MeanIntensity if task.arity() != 2 => Err(
                Error::SchemaMismatch(format!("binary stub cannot serve {}", task.name())),
            ),
            _ => Ok(()),
        }
    }
}

impl Backend for StubSpec {
    fn infer(&self, patch: &Patch) -> Result<Vec<f64>> {
        let n = patch.pixel_count().max(1) as f64;
        match self {
            StubSpec::Constant { values } => Ok(values.clone()),
            StubSpec::MeanRedThreshold { threshold, p_high } => {
                let red: u64 = patch.pixels.chunks_exact(3).map(|p| p[0] as u64).sum();
                let positive = red as f64 / n >= *threshold;
                let p = if positive { *p_high } else { 1.0 - *p_high };
                Ok(vec![1.0 - p, p])
            }
            StubSpec::MeanIntensity => {
                let total: u64 = patch.pixels.iter().map(|&v| v as u64).sum();
                let p = 1.0 - total as f64 / (3.0 * n * 255.0);
                Ok(vec![1.0 - p, p])
            }
        }
    }
}
