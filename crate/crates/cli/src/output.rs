//! Result serialization: CSV time series, JSON summaries, and the run
//! manifest. The manifest is written last through a temp-file rename so an
//! interrupted run never leaves one claiming complete outputs.

use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// 17 significant digits: enough to round-trip an f64 exactly.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct OutputDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(OutputDir { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }

    /// One row per record; `row_head` carries non-float lead columns.
    pub fn write_csv<'a>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl Iterator<Item = (Vec<String>, &'a [f64])>,
    ) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let io_err = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
        w.write_record(header).map_err(io_err)?;
        for (head, floats) in rows {
            let record: Vec<String> =
                head.into_iter().chain(floats.iter().map(|v| fmt_float(*v))).collect();
            w.write_record(&record).map_err(io_err)?;
        }
        w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(&path, text + "\n")
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Write `manifest.json` atomically, after all other outputs.
    pub fn write_manifest(&self, manifest: &RunManifest) -> Result<(), CliError> {
        let tmp = self.dir.join("manifest.json.tmp");
        let fin = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(manifest)
            .map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(&tmp, text + "\n")
            .map_err(|e| CliError::Io(format!("{}: {e}", tmp.display())))?;
        fs::rename(&tmp, &fin)
            .map_err(|e| CliError::Io(format!("{}: {e}", fin.display())))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub experiment: String,
    /// SHA-256 of the effective config (after any seed override), hex.
    pub config_sha256: String,
    pub seed: Option<u64>,
    /// Seeds handed to each disorder realization, in realization order.
    pub per_realization_seeds: Vec<u64>,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(data);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
