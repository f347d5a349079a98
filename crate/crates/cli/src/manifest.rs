//! Run manifests written beside every output file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    toolkit_version: &'a str,
    seed: Option<u64>,
    config: &'a BTreeMap<String, String>,
    inputs: Vec<InputDigest>,
    outputs: Vec<String>,
    duration_secs: f64,
}

/// Collects what a subcommand read and wrote; [`finish`](Self::finish)
/// writes `<output>.manifest.json` for every output.
pub struct Run {
    subcommand: &'static str,
    started: Instant,
    seed: Option<u64>,
    config: BTreeMap<String, String>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Run {
    pub fn new(subcommand: &'static str) -> Self {
        Run {
            subcommand,
            started: Instant::now(),
            seed: None,
            config: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.config.insert(key.into(), value.to_string());
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn finish(self) -> Result<(), CliError> {
        let inputs = self
            .inputs
            .iter()
            .map(|p| {
                let bytes = fs::read(p).map_err(|e| CliError::runtime(format!("{}: {e}", p.display())))?;
                Ok(InputDigest {
                    path: p.display().to_string(),
                    sha256: hex::encode(Sha256::digest(&bytes)),
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let manifest = Manifest {
            subcommand: self.subcommand,
            toolkit_version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            config: &self.config,
            inputs,
            outputs: self.outputs.iter().map(|p| p.display().to_string()).collect(),
            duration_secs: self.started.elapsed().as_secs_f64(),
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        for out in &self.outputs {
            let path = manifest_path(out);
            fs::write(&path, format!("{json}\n")).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
