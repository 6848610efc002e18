use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Version of the CSV layout written in every header.
pub const CSV_SCHEMA: u32 = 1;
pub const TRAJECTORY_COLUMNS: [&str; 5] = ["t", "fidelity", "trace", "purity", "min_eig"];
pub const SWEEP_COLUMNS: [&str; 6] = ["sweep_param", "F_tau", "E_tau", "E_bound", "Mq", "regime"];

/// A table destined for one CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Set when some rows are missing because a point failed.
    pub partial: bool,
}

impl CsvTable {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), partial: false }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Header comments, column line, then one line per row.
    pub fn render(&self, config_hash: &str) -> String {
        let mut out = format!("# schema={CSV_SCHEMA}\n# config_hash={config_hash}\n");
        if self.partial {
            out.push_str("# partial=true\n");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// Reads the `# config_hash=` header line of a rendered CSV.
pub fn csv_config_hash(text: &str) -> Option<&str> {
    text.lines().take_while(|l| l.starts_with('#')).find_map(|l| l.strip_prefix("# config_hash="))
}

/// Lines of a rendered CSV after the header comments.
pub fn csv_body(text: &str) -> Vec<&str> {
    text.lines().skip_while(|l| l.starts_with('#')).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Ok,
    NumericalError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub jobs: usize,
    pub status: RunStatus,
    pub partial: bool,
    pub error: Option<String>,
    pub files: Vec<FileRecord>,
    pub started_unix_ms: u128,
    pub wall_time_s: f64,
}

pub(crate) fn write_file(dir: &Path, name: &str, contents: &str) -> std::io::Result<FileRecord> {
    let path: PathBuf = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(FileRecord { name: name.into(), sha256: hex::encode(Sha256::digest(contents.as_bytes())) })
}
