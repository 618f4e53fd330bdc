//! Run manifests and atomic file output.
//!
//! Every subcommand emits a manifest with its resolved parameters and the
//! SHA-256 digests of its input files; re-running with those parameters
//! reproduces the outputs bit for bit (given the same platform
//! eigensolver). Output files are written to a temporary sibling and
//! renamed into place.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::errors::{CliError, CliResult};

pub struct ManifestBuilder {
    subcommand: &'static str,
    parameters: Map<String, Value>,
    input_digests: Map<String, Value>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(subcommand: &'static str) -> Self {
        Self {
            subcommand,
            parameters: Map::new(),
            input_digests: Map::new(),
            started: Instant::now(),
        }
    }

    pub fn parameter(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn digest_input(&mut self, path: &Path) -> CliResult<&mut Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.input_digests
            .insert(path.display().to_string(), Value::String(hex));
        Ok(self)
    }

    pub fn finish(self) -> Value {
        json!({
            "subcommand": self.subcommand,
            "parameters": Value::Object(self.parameters),
            "input_digests": Value::Object(self.input_digests),
            "version": env!("CARGO_PKG_VERSION"),
            "duration_seconds": self.started.elapsed().as_secs_f64(),
        })
    }

    /// Writes the manifest to `explicit` if given, next to `primary_output`
    /// otherwise, and to stdout when the command produced no file at all.
    pub fn emit(self, explicit: Option<&Path>, primary_output: Option<&Path>) -> CliResult<()> {
        let manifest = self.finish();
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Input(format!("serialize manifest: {e}")))?;
        match (explicit, primary_output) {
            (Some(path), _) => write_atomic(path, text.as_bytes()),
            (None, Some(output)) => {
                let mut name = output.file_name().unwrap_or_default().to_os_string();
                name.push(".manifest.json");
                write_atomic(&output.with_file_name(name), text.as_bytes())
            }
            (None, None) => {
                println!("{text}");
                Ok(())
            }
        }
    }
}

/// Write-then-rename so readers never observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut tmp: PathBuf = path.to_path_buf();
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".tmp{}", std::process::id()));
    tmp.set_file_name(name);
    std::fs::write(&tmp, bytes)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::Input(format!("cannot move output into {}: {e}", path.display())))?;
    Ok(())
}
