//! Deterministic run manifests. Every artifact-producing command
//! records its resolved arguments, seeds, input digests, and output
//! names in `manifest.json`, so a run is reproducible from the
//! manifest alone. No timestamps or host details are written.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    /// Resolved arguments after config/default merging.
    pub args: BTreeMap<String, Value>,
    /// sha256 of the canonical JSON encoding of `args`.
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    /// sha256 per input file, keyed by path.
    pub inputs: BTreeMap<String, String>,
    /// Artifact file names inside the output directory.
    pub outputs: Vec<String>,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| {
        CliError::Runtime(format!("cannot hash input {}: {e}", path.display()))
    })?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects manifest fields as a command runs.
pub struct ManifestBuilder {
    command: String,
    args: BTreeMap<String, Value>,
    seeds: BTreeMap<String, u64>,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
    out_dir: PathBuf,
}

impl ManifestBuilder {
    pub fn new(command: &str, out_dir: &Path) -> Result<ManifestBuilder, CliError> {
        std::fs::create_dir_all(out_dir).map_err(|e| {
            CliError::Runtime(format!("cannot create {}: {e}", out_dir.display()))
        })?;
        Ok(ManifestBuilder {
            command: command.to_string(),
            args: BTreeMap::new(),
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            out_dir: out_dir.to_path_buf(),
        })
    }

    pub fn arg(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.args.insert(
            key.to_string(),
            serde_json::to_value(value).expect("arg serializes"),
        );
        self
    }

    pub fn seed(&mut self, name: &str, seed: u64) -> &mut Self {
        self.seeds.insert(name.to_string(), seed);
        self.arg(name, seed)
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self, CliError> {
        self.inputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(self)
    }

    /// Write an artifact into the output directory and record it.
    pub fn write_output(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    /// Record an artifact that was written directly by the command.
    pub fn note_output(&mut self, name: &str) -> &mut Self {
        self.outputs.push(name.to_string());
        self
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        let canonical = serde_json::to_string(&self.args).expect("args serialize");
        let config_hash = hex(&Sha256::digest(canonical.as_bytes()));
        self.outputs.push("manifest.json".to_string());
        self.outputs.sort();
        self.outputs.dedup();
        let manifest = Manifest {
            command: self.command,
            args: self.args,
            config_hash,
            seeds: self.seeds,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let json =
            serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let path = self.out_dir.join("manifest.json");
        std::fs::write(&path, json)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
    }
}
