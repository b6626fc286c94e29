use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Stain basis estimated from a reference image.
///
/// `stain_matrix[channel][stain]` holds unit optical-density vectors as
/// columns: column 0 is hematoxylin, column 1 eosin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StainProfile<T: Scalar> {
    pub stain_matrix: [[T; 2]; 3],
    pub max_concentrations: [T; 2],
    pub io: T,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    shape: [usize; 2],
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    stain_matrix: MatrixFile,
    max_concentrations: [f64; 2],
    io: f64,
}

impl<T: Scalar> StainProfile<T> {
    pub fn column(&self, stain: usize) -> [T; 3] {
        [self.stain_matrix[0][stain], self.stain_matrix[1][stain], self.stain_matrix[2][stain]]
    }

    pub fn from_columns(h: [T; 3], e: [T; 3], max_concentrations: [T; 2], io: T) -> Self {
        Self {
            stain_matrix: [[h[0], e[0]], [h[1], e[1]], [h[2], e[2]]],
            max_concentrations,
            io,
        }
    }

    /// Checks unit norm, non-negativity, column order and positive scales.
    pub fn validate(&self) -> Result<()> {
        for s in 0..2 {
            let col = self.column(s);
            let norm = col.iter().map(|&c| c * c).fold(T::zero(), |a, b| a + b).sqrt();
            if (norm - T::one()).abs().as_f64() > 1e-6 {
                return Err(Error::invalid(format!("stain column {s} has norm {norm}")));
            }
            if col.iter().any(|&c| c < T::zero()) {
                return Err(Error::invalid(format!("stain column {s} has a negative entry")));
            }
            if !(self.max_concentrations[s] > T::zero()) {
                return Err(Error::invalid(format!("max concentration {s} must be positive")));
            }
        }
        if self.stain_matrix[2][0] < self.stain_matrix[2][1] {
            return Err(Error::invalid("hematoxylin column must carry the larger blue component"));
        }
        if !(self.io > T::zero()) {
            return Err(Error::invalid("io must be positive"));
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> StainProfile<U> {
        let c = |v: T| U::lit(v.as_f64());
        StainProfile {
            stain_matrix: self.stain_matrix.map(|r| r.map(c)),
            max_concentrations: self.max_concentrations.map(c),
            io: c(self.io),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ProfileFile {
            stain_matrix: MatrixFile {
                shape: [3, 2],
                data: self.stain_matrix.iter().flatten().map(|v| v.as_f64()).collect(),
            },
            max_concentrations: self.max_concentrations.map(|v| v.as_f64()),
            io: self.io.as_f64(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProfileFile = serde_json::from_str(text)?;
        if file.stain_matrix.shape != [3, 2] || file.stain_matrix.data.len() != 6 {
            return Err(Error::invalid(format!(
                "stain matrix must have shape [3, 2] with 6 values, got {:?} with {}",
                file.stain_matrix.shape,
                file.stain_matrix.data.len()
            )));
        }
        let d = &file.stain_matrix.data;
        let profile = StainProfile {
            stain_matrix: [
                [T::lit(d[0]), T::lit(d[1])],
                [T::lit(d[2]), T::lit(d[3])],
                [T::lit(d[4]), T::lit(d[5])],
            ],
            max_concentrations: file.max_concentrations.map(T::lit),
            io: T::lit(file.io),
        };
        profile.validate()?;
        Ok(profile)
    }
}

/// Angle between two 3-vectors in degrees.
pub fn angular_distance_deg<T: Scalar>(a: [T; 3], b: [T; 3]) -> f64 {
    let dot: f64 = (0..3).map(|i| a[i].as_f64() * b[i].as_f64()).sum();
    let na: f64 = a.iter().map(|v| v.as_f64().powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v.as_f64().powi(2)).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0).acos().to_degrees()
}
