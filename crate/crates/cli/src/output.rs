//! Output directory handling: lockfile, provenance headers and writers.

use serde::Serialize;
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const CODE_HASH: &str = env!("ENP_CODE_HASH");
const LOCK: &str = ".enp.lock";

/// An output directory held exclusively for the lifetime of the value.
pub struct OutputDir {
    root: PathBuf,
    command: String,
    config: BTreeMap<String, String>,
    written: Vec<String>,
}

#[derive(Debug)]
pub enum OutputError {
    Locked(PathBuf),
    Io(PathBuf, io::Error),
}

impl std::fmt::Display for OutputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OutputError::Locked(p) => write!(f, "output directory is in use by another run (remove {} if stale)", p.display()),
            OutputError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl OutputDir {
    pub fn open(root: &Path, command: &str, config: &BTreeMap<String, String>) -> Result<Self, OutputError> {
        fs::create_dir_all(root).map_err(|e| OutputError::Io(root.to_path_buf(), e))?;
        let lock = root.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => return Err(OutputError::Locked(lock)),
            Err(e) => return Err(OutputError::Io(lock, e)),
        }
        Ok(Self { root: root.to_path_buf(), command: command.to_string(), config: config.clone(), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn create(&mut self, name: &str) -> Result<File, OutputError> {
        let p = self.path(name);
        self.written.push(name.to_string());
        File::create(&p).map_err(|e| OutputError::Io(p, e))
    }

    fn io<T>(&self, name: &str, r: io::Result<T>) -> Result<T, OutputError> {
        r.map_err(|e| OutputError::Io(self.path(name), e))
    }

    /// `#`-prefixed provenance lines for text outputs.
    fn header(&self) -> String {
        let cfg: Vec<String> = self.config.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("# enp {} code {CODE_HASH}\n# config {}\n", self.command, cfg.join(" "))
    }

    /// JSON document with `command`, `code_hash`, `config` and `timestamp` alongside `body`.
    pub fn write_json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<(), OutputError> {
        let mut doc = Map::new();
        doc.insert("command".into(), json!(self.command));
        doc.insert("code_hash".into(), json!(CODE_HASH));
        doc.insert("config".into(), json!(self.config));
        doc.insert("timestamp".into(), json!(SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)));
        let body = serde_json::to_value(body).map_err(|e| OutputError::Io(self.path(name), io::Error::other(e)))?;
        match body {
            Value::Object(m) => doc.extend(m),
            other => {
                doc.insert("result".into(), other);
            }
        }
        let mut f = self.create(name)?;
        let text = serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable");
        self.io(name, writeln!(f, "{text}"))
    }

    /// CSV with provenance comment lines, a header row and data rows.
    pub fn write_csv(&mut self, name: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), OutputError> {
        let mut text = self.header();
        if !columns.is_empty() {
            text.push_str(&columns.join(","));
            text.push('\n');
        }
        for r in rows {
            text.push_str(&r.join(","));
            text.push('\n');
        }
        self.write_text_raw(name, &text)
    }

    /// Plain text with provenance comment lines.
    pub fn write_text(&mut self, name: &str, body: &str) -> Result<(), OutputError> {
        let text = format!("{}{body}", self.header());
        self.write_text_raw(name, &text)
    }

    fn write_text_raw(&mut self, name: &str, text: &str) -> Result<(), OutputError> {
        let mut f = self.create(name)?;
        self.io(name, f.write_all(text.as_bytes()))
    }

    /// Record a file written by another routine.
    pub fn record(&mut self, name: &str) {
        self.written.push(name.to_string());
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(self.root.join(LOCK));
    }
}

/// Shortest round-trip representation.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}
