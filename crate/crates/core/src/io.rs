//! Deterministic artifact output.

use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

/// Float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text with a header row and LF endings.
pub fn csv<I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Write through a temporary sibling and rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub parameters: serde_json::Value,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, seed: Option<u64>, parameters: serde_json::Value) -> Self {
        Manifest { command: command.into(), version: env!("CARGO_PKG_VERSION").into(), seed, parameters, files: Vec::new() }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Collects files under one directory and finishes with `manifest.json`.
pub struct OutputDir<'a> {
    pub root: &'a Path,
    pub manifest: Manifest,
}

impl<'a> OutputDir<'a> {
    pub fn new(root: &'a Path, manifest: Manifest) -> Self {
        OutputDir { root, manifest }
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.root.join(name), bytes)?;
        self.manifest.files.push(name.into());
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        write_atomic(&self.root.join("manifest.json"), self.manifest.to_json()?.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(csv(&["a", "b"], vec![vec![1.0, 2.0]]), "a,b\n1.0000000000000000e0,2.0000000000000000e0\n");
    }
}
