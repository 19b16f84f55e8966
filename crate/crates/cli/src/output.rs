//! Artifact writing: CSV tables, the run manifest and the output directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const MANIFEST_VERSION: u32 = 1;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        // Adding zero maps -0 to 0.
        format!("{:.16e}", x + 0.0)
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// A CSV table assembled in memory.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.text, "{}", cells.join(","));
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory plus a record of the files written to it.
pub struct OutDir {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

impl OutDir {
    /// Refuses an existing directory unless `force`.
    pub fn create(dir: &Path, force: bool) -> Result<OutDir, CliError> {
        if dir.exists() && !force {
            return Err(CliError::Io(format!("{} exists; pass --force to overwrite", dir.display())));
        }
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(OutDir { dir: dir.to_path_buf(), files: BTreeMap::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.files.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn table(&mut self, name: &str, t: Table) -> Result<(), CliError> {
        self.write(name, t.text.as_bytes())
    }

    pub fn json(&mut self, name: &str, v: &impl Serialize) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// Writes `manifest.json` and the separate `timing.json`, which holds the
    /// only nondeterministic value of a run.
    pub fn finish(mut self, command: &str, config: &RunConfig, results: Value, seconds: f64) -> Result<(), CliError> {
        let cfg = serde_json::to_value(config).map_err(|e| CliError::Io(e.to_string()))?;
        let input = serde_json::to_string(&serde_json::json!({ "command": command, "config": cfg })).unwrap();
        let manifest = serde_json::json!({
            "manifest_version": MANIFEST_VERSION,
            "command": command,
            "seed": config.seed,
            "input_hash": sha256_hex(input.as_bytes()),
            "config": cfg,
            "files": self.files,
            "results": results,
        });
        let timing = serde_json::json!({ "wall_clock_seconds": seconds });
        self.json("manifest.json", &manifest)?;
        self.json("timing.json", &timing)
    }
}
