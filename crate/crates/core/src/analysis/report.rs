//! Plot data and metrics written to disk with a digest manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};
use crate::linsys::SigmaCurve;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Numeric table with a header row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| invalid(format!("csv: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            if row.len() != self.header.len() {
                return Err(invalid("table row width differs from header"));
            }
            w.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
        }
        w.into_inner().map_err(|e| invalid(format!("csv: {e}")))
    }
}

/// Columns `omega_rad_s`, then `column_names` (one per singular value).
pub fn sigma_table(curve: &SigmaCurve, column_names: &[&str]) -> Table {
    let mut header = vec!["omega_rad_s".to_string()];
    header.extend(column_names.iter().map(|s| s.to_string()));
    let rows = curve
        .grid
        .points()
        .iter()
        .zip(&curve.values)
        .map(|(w, v)| {
            let mut row = vec![*w];
            row.extend((0..column_names.len()).map(|i| v.get(i).copied().unwrap_or(0.0)));
            row
        })
        .collect();
    Table { header, rows }
}

/// Everything a report contains, keyed by relative path without extension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub tables: BTreeMap<String, Table>,
    pub documents: BTreeMap<String, serde_json::Value>,
    /// Written verbatim; keys include the extension.
    pub files: BTreeMap<String, Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn digest(&self, path: &str) -> Option<&str> {
        self.files.iter().find(|e| e.path == path).map(|e| e.sha256.as_str())
    }
}

fn write_file(out_dir: &Path, rel: &str, bytes: &[u8]) -> Result<ManifestEntry> {
    if rel.is_empty() || Path::new(rel).is_absolute() || rel.split('/').any(|c| c == "..") {
        return Err(invalid(format!("artifact path {rel:?} escapes the output directory")));
    }
    let path: PathBuf = out_dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, bytes)?;
    Ok(ManifestEntry { path: rel.to_string(), sha256: hex::encode(Sha256::digest(bytes)), bytes: bytes.len() as u64 })
}

/// Writes tables as `.csv`, documents as `.json` and raw files under
/// `out_dir`, then
/// the manifest listing them in path order.
pub fn emit_report(artifacts: &Artifacts, out_dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    for (name, t) in &artifacts.tables {
        files.push(write_file(out_dir, &format!("{name}.csv"), &t.to_csv()?)?);
    }
    for (name, doc) in &artifacts.documents {
        let mut text = serde_json::to_string_pretty(doc)?;
        text.push('\n');
        files.push(write_file(out_dir, &format!("{name}.json"), text.as_bytes())?);
    }
    for (name, bytes) in &artifacts.files {
        files.push(write_file(out_dir, name, bytes)?);
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest { files };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(out_dir.join(MANIFEST_FILE), text)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsys::make_grid;

    #[test]
    fn empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let m = emit_report(&Artifacts::default(), dir.path()).unwrap();
        assert!(m.files.is_empty());
        let back: Manifest = serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn one_curve() {
        let dir = tempfile::tempdir().unwrap();
        let grid = make_grid(1.0, 10.0, 2).unwrap();
        let curve = SigmaCurve { grid, values: vec![vec![1.0], vec![0.5], vec![0.25]] };
        let mut a = Artifacts::default();
        a.tables.insert("curves/sigma".into(), sigma_table(&curve, &["sigma_max"]));
        let m = emit_report(&a, dir.path()).unwrap();
        assert_eq!(m.files.len(), 1);
        let text = fs::read_to_string(dir.path().join("curves/sigma.csv")).unwrap();
        assert_eq!(text.lines().next().unwrap(), "omega_rad_s,sigma_max");
        assert_eq!(text.lines().count(), 4);
        let want = hex::encode(Sha256::digest(text.as_bytes()));
        assert_eq!(m.digest("curves/sigma.csv"), Some(want.as_str()));
    }

    #[test]
    fn rerun_is_identical() {
        let mut a = Artifacts::default();
        a.tables.insert("t".into(), Table { header: vec!["x".into(), "y".into()], rows: vec![vec![0.1, 1.0 / 3.0]] });
        a.documents.insert("metrics".into(), serde_json::json!({"mu_max": 1.1226}));
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        assert_eq!(emit_report(&a, d1.path()).unwrap(), emit_report(&a, d2.path()).unwrap());
    }

    #[test]
    fn escaping_paths_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::default();
        a.documents.insert("../x".into(), serde_json::json!({}));
        assert!(emit_report(&a, dir.path()).is_err());
    }

    #[test]
    fn csv_round_trips_floats() {
        let t = Table { header: vec!["v".into()], rows: vec![vec![0.1 + 0.2], vec![1e-300], vec![-2.5]] };
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        let back: Vec<f64> = text.lines().skip(1).map(|l| l.parse().unwrap()).collect();
        assert_eq!(back, vec![0.1 + 0.2, 1e-300, -2.5]);
    }
}
