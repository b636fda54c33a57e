//! Run directories: effective-config echo and manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const CONFIG_ECHO: &str = "effective_config.json";
pub const MANIFEST: &str = "manifest.json";

#[derive(Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config_sha256: String,
    inputs: Vec<FileEntry>,
    outputs: Vec<FileEntry>,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Output directory of one command.
pub struct RunDir {
    pub dir: PathBuf,
    command: &'static str,
    inputs: Vec<PathBuf>,
    outputs: Vec<String>,
}

impl RunDir {
    /// Creates `dir` and echoes the effective config into it.
    pub fn create(dir: &Path, command: &'static str, config: &RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let run = Self {
            dir: dir.to_path_buf(),
            command,
            inputs: Vec::new(),
            outputs: Vec::new(),
        };
        let json = serde_json::to_string_pretty(config).expect("config serializes");
        run.write(CONFIG_ECHO, format!("{json}\n").as_bytes())?;
        Ok(run)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let p = self.path(name);
        fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))
    }

    /// Writes an output file and records it in the manifest.
    pub fn output(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        self.write(name, bytes)?;
        self.produced(name);
        Ok(())
    }

    /// Records an output written by other means.
    pub fn produced(&mut self, name: &str) {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
    }

    pub fn output_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(value).expect("value serializes");
        self.output(name, format!("{json}\n").as_bytes())
    }

    /// Writes the manifest and checks that the config echo is present.
    pub fn finish(self) -> Result<(), CliError> {
        let echo = self.path(CONFIG_ECHO);
        if !echo.is_file() {
            return Err(CliError::validation(format!("self-check: {} is missing", echo.display())));
        }
        let entry = |p: &Path, shown: String| -> Result<FileEntry, CliError> {
            Ok(FileEntry {
                path: shown,
                sha256: sha256_file(p)?,
            })
        };
        let mut outputs = Vec::new();
        let mut names = self.outputs.clone();
        names.sort();
        for name in names {
            outputs.push(entry(&self.path(&name), name.clone())?);
        }
        let inputs = self
            .inputs
            .iter()
            .map(|p| entry(p, p.display().to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        let manifest = Manifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: sha256_file(&echo)?,
            inputs,
            outputs,
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        self.write(MANIFEST, format!("{json}\n").as_bytes())
    }
}
