//! JSONL manifests: one `{"ground_truth": ..., "reference": ...}` per line.
//! The `_path` suffixed keys are accepted too. Relative paths resolve against
//! the manifest's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    #[serde(alias = "ground_truth_path")]
    ground_truth: PathBuf,
    #[serde(alias = "reference_path")]
    reference: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    /// 1-based line number in the manifest.
    pub line: usize,
    pub ground_truth: PathBuf,
    pub reference: PathBuf,
}

pub fn read(path: &Path) -> Result<Vec<Entry>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input("manifest", format!("{}: {e}", path.display())))?;
    parse(&text, path.parent().unwrap_or(Path::new(".")))
}

pub fn parse(text: &str, base: &Path) -> Result<Vec<Entry>, CliError> {
    let mut entries = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: Record = serde_json::from_str(line).map_err(|e| CliError::input("manifest", format!("line {}: {e}", k + 1)))?;
        entries.push(Entry {
            line: k + 1,
            ground_truth: base.join(r.ground_truth),
            reference: base.join(r.reference),
        });
    }
    if entries.is_empty() {
        return Err(CliError::input("manifest", "manifest has no entries"));
    }
    Ok(entries)
}
