use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::classifier::Backend;
use super::schema::{LabelProbs, Task};
use crate::error::{Error, Result};
use crate::slide::Patch;

/// One line of a lookup fixture: `{"level":..,"x":..,"y":..,"values":[..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LookupEntry {
    pub level: usize,
    pub x: i64,
    pub y: i64,
    pub values: Vec<f64>,
}

pub fn parse_lookup_table(text: &str) -> Result<Vec<LookupEntry>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: LookupEntry = serde_json::from_str(line)
            .map_err(|e| Error::invalid(format!("lookup table line {}: {e}", i + 1)))?;
        out.push(entry);
    }
    Ok(out)
}

pub fn write_lookup_table(path: &Path, entries: &[LookupEntry]) -> Result<()> {
    let mut buf = Vec::new();
    for e in entries {
        serde_json::to_writer(&mut buf, e)?;
        buf.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Oracle backend keyed by patch origin `(level, x, y)`.
pub(crate) struct LookupBackend {
    table: HashMap<(usize, i64, i64), Vec<f64>>,
    default: Option<Vec<f64>>,
}

impl LookupBackend {
    pub(crate) fn from_bytes(bytes: &[u8], task: Task, default: Option<Vec<f64>>) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::invalid(format!("lookup table is not UTF-8: {e}")))?;
        let mut table = HashMap::new();
        for entry in parse_lookup_table(text)? {
            LabelProbs::new(task, entry.values.clone())?;
            if table.insert((entry.level, entry.x, entry.y), entry.values).is_some() {
                return Err(Error::invalid(format!(
                    "duplicate lookup key ({}, {}, {})",
                    entry.level, entry.x, entry.y
                )));
            }
        }
        if let Some(d) = &default {
            LabelProbs::new(task, d.clone())?;
        }
        Ok(Self { table, default })
    }
}

impl Backend for LookupBackend {
    fn infer(&self, patch: &Patch) -> Result<Vec<f64>> {
        let o = patch.origin;
        self.table
            .get(&(o.level, o.x, o.y))
            .or(self.default.as_ref())
            .cloned()
            .ok_or_else(|| Error::Backend(format!("lookup table has no entry for ({}, {}, {})", o.level, o.x, o.y)))
    }
}
