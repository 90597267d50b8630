//! Dataset files and manifests.
//!
//! A dataset is stored as `NAME.jsonl`, one example per line, next to
//! `NAME.meta.json` with the task, its signature, the generation config
//! and the record digest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Dataset, Example, ForgeError, GenerationConfig, Rejection};
use crate::algebra::{Level, TaskKind};

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// The records file contents.
pub fn render_jsonl(ds: &Dataset) -> String {
    let mut out = String::new();
    for e in &ds.examples {
        out.push_str(&serde_json::to_string(e).expect("examples serialize"));
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct Meta {
    task: String,
    kind: TaskKind,
    level: Level,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    separator: Option<String>,
    config: GenerationConfig,
    records: usize,
    sha256: String,
}

/// Manifest line for one exported dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub task: String,
    pub file: String,
    pub records: usize,
    pub sha256: String,
    pub config: GenerationConfig,
}

fn meta_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ForgeError + '_ {
    move |source| ForgeError::Io { path: path.display().to_string(), source }
}

fn to_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("manifest serializes");
    s.push('\n');
    s
}

/// Writes the records and the metadata sidecar.
pub fn export_dataset(ds: &Dataset, path: &Path) -> Result<DatasetEntry, ForgeError> {
    let body = render_jsonl(ds);
    let sha256 = digest_bytes(body.as_bytes());
    let meta = Meta {
        task: ds.task.clone(),
        kind: ds.kind,
        level: ds.level,
        separator: ds.separator.clone(),
        config: ds.config.clone(),
        records: ds.examples.len(),
        sha256: sha256.clone(),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, &body).map_err(io_err(path))?;
    let mp = meta_path(path);
    fs::write(&mp, to_pretty(&meta)).map_err(io_err(&mp))?;
    Ok(DatasetEntry {
        task: ds.task.clone(),
        file: path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
        records: ds.examples.len(),
        sha256,
        config: ds.config.clone(),
    })
}

/// Reads a dataset written by [`export_dataset`].
pub fn import_dataset(path: &Path) -> Result<Dataset, ForgeError> {
    let mp = meta_path(path);
    let meta_text = fs::read_to_string(&mp).map_err(io_err(&mp))?;
    let meta: Meta = serde_json::from_str(&meta_text).map_err(|e| ForgeError::Malformed {
        path: mp.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let body = fs::read_to_string(path).map_err(io_err(path))?;
    let mut examples = Vec::new();
    for (idx, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let e: Example = serde_json::from_str(line).map_err(|err| ForgeError::Malformed {
            path: path.display().to_string(),
            line: idx + 1,
            message: err.to_string(),
        })?;
        examples.push(e);
    }
    if examples.len() != meta.records {
        return Err(ForgeError::Malformed {
            path: path.display().to_string(),
            line: body.lines().count(),
            message: format!("{} records, metadata says {}", examples.len(), meta.records),
        });
    }
    Ok(Dataset { task: meta.task, kind: meta.kind, level: meta.level, config: meta.config, separator: meta.separator, examples })
}

/// Run manifest written by every command.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    /// Flags and seeds of the run, key ordered.
    pub parameters: BTreeMap<String, serde_json::Value>,
    /// Input file path to SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Output file name to SHA-256.
    pub outputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub datasets: Vec<DatasetEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rejections: Vec<Rejection>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Manifest { command: command.to_string(), ..Manifest::default() }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.parameters.insert(key.to_string(), serde_json::to_value(value).expect("parameter serializes"));
        self
    }

    /// Records an input file's digest; directories are hashed file by file.
    pub fn input(&mut self, path: &Path) -> Result<&mut Self, ForgeError> {
        if path.is_dir() {
            let mut entries: Vec<PathBuf> =
                fs::read_dir(path).map_err(io_err(path))?.filter_map(|e| e.ok().map(|e| e.path())).collect();
            entries.sort();
            for p in entries.iter().filter(|p| p.is_file()) {
                self.input(p)?;
            }
        } else {
            let bytes = fs::read(path).map_err(io_err(path))?;
            self.inputs.insert(path.display().to_string(), digest_bytes(&bytes));
        }
        Ok(self)
    }

    pub fn output(&mut self, name: &str, bytes: &[u8]) -> &mut Self {
        self.outputs.insert(name.to_string(), digest_bytes(bytes));
        self
    }

    pub fn render(&self) -> String {
        to_pretty(self)
    }

    pub fn write(&self, path: &Path) -> Result<(), ForgeError> {
        fs::write(path, self.render()).map_err(io_err(path))
    }
}
