use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const OUT_ENV: &str = "SEWERCAST_OUT";
const DEFAULT_ROOT: &str = "sewercast-runs";

#[derive(Debug, Serialize)]
struct FileDigest {
    name: String,
    sha256: String,
}

/// Manifest of one run. Holds no clock time or absolute paths, so identical
/// runs give identical manifests.
#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: Option<u64>,
    settings: &'a serde_json::Value,
    inputs: &'a [FileDigest],
    outputs: &'a [FileDigest],
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Output directory of one subcommand invocation.
pub struct RunDir {
    path: PathBuf,
    command: String,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl RunDir {
    /// `out` if given, else `$SEWERCAST_OUT/<command>`, else
    /// `sewercast-runs/<command>`.
    pub fn create(out: Option<&Path>, command: &str) -> Result<Self, CliError> {
        let path = match out {
            Some(p) => p.to_path_buf(),
            None => std::env::var_os(OUT_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_ROOT))
                .join(command),
        };
        fs::create_dir_all(&path)
            .map_err(|e| CliError::Other(format!("cannot create output directory {}: {e}", path.display())))?;
        Ok(Self {
            path,
            command: command.to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Records an input file by name and content digest.
    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
        self.inputs.push(FileDigest {
            name: file_name(path),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let target = self.path.join(name);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&target, bytes).map_err(|e| CliError::Other(format!("{}: {e}", target.display())))?;
        self.outputs.retain(|o| o.name != name);
        self.outputs.push(FileDigest {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(target)
    }

    /// Renders into memory with `f`, then writes the bytes.
    pub fn write_with<E>(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> Result<(), E>,
    ) -> Result<PathBuf, CliError>
    where
        CliError: From<E>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Registers a file some other writer already put in the directory.
    pub fn adopt(&mut self, name: &str) -> Result<(), CliError> {
        let bytes = fs::read(self.path.join(name))?;
        self.outputs.retain(|o| o.name != name);
        self.outputs.push(FileDigest {
            name: name.to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Writes `manifest.json` and returns the run directory.
    pub fn finish(mut self, seed: Option<u64>, settings: impl Serialize) -> Result<PathBuf, CliError> {
        let settings = serde_json::to_value(settings)?;
        self.outputs.sort_by(|a, b| a.name.cmp(&b.name));
        let manifest = Manifest {
            tool: "sewercast",
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            seed,
            settings: &settings,
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.path.join("manifest.json"), text)?;
        Ok(self.path)
    }
}
