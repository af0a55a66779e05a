//! Artifact writers. CSV files start with a `# schema: beable/<table>/v1`
//! line, then a header row.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const CSV_SCHEMA_VERSION: u32 = 1;

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(table: &str, header: &[&str]) -> Self {
        let mut text = format!("# schema: beable/{table}/v{CSV_SCHEMA_VERSION}\n");
        text.push_str(&header.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: std::fmt::Display,
    {
        let mut first = true;
        for c in cells {
            if !first {
                self.text.push(',');
            }
            first = false;
            let _ = write!(self.text, "{c}");
        }
        self.text.push('\n');
    }
}

/// Collects artifacts under one output directory.
pub struct Artifacts {
    dir: PathBuf,
    pub written: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Output {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|source| CliError::Output { path, source })?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, csv: Csv) -> Result<(), CliError> {
        self.put(name, csv.text.as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).expect("serializable artifact");
        self.put(name, text.as_bytes())
    }

    pub fn json_lines<T: Serialize>(&mut self, name: &str, records: &[T]) -> Result<(), CliError> {
        let mut text = String::new();
        for r in records {
            text.push_str(&serde_json::to_string(r).expect("serializable record"));
            text.push('\n');
        }
        self.put(name, text.as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
