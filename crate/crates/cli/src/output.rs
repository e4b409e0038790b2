//! Result persistence. Every run writes through one [`RunWriter`], which stamps
//! each artifact with the hash of the resolved configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::svg::Plot;

pub const SCHEMA_VERSION: u32 = 1;

/// Keys are sorted (serde_json's default map is ordered), so this is canonical.
pub fn canonical(value: &Value) -> String {
    serde_json::to_string(value).expect("JSON values always serialize")
}

pub fn config_hash(config: &Value) -> String {
    hex::encode(Sha256::digest(canonical(config).as_bytes()))
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("payload types serialize to JSON")
}

pub struct RunWriter {
    subcommand: &'static str,
    config: Value,
    hash: String,
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl RunWriter {
    pub fn new<C: Serialize>(subcommand: &'static str, config: &C, dir: &Path) -> CliResult<Self> {
        let config = to_value(config);
        let hash = config_hash(&config);
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            subcommand,
            config,
            hash,
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn path(&self, ext: &str) -> PathBuf {
        self.dir
            .join(format!("{}-{}.{ext}", self.subcommand, &self.hash[..12]))
    }

    fn put(&mut self, path: PathBuf, body: String) -> CliResult<()> {
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    /// Header line first, then one line per payload. Only the header carries a
    /// timestamp, so payload lines are byte-identical across reruns.
    pub fn write_jsonl(&mut self, payloads: &[Value]) -> CliResult<()> {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let header = json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "header",
            "subcommand": self.subcommand,
            "timestamp": timestamp,
            "config_hash": self.hash,
            "config": self.config,
        });
        let mut body = canonical(&header);
        body.push('\n');
        for p in payloads {
            let line = json!({
                "schema_version": SCHEMA_VERSION,
                "config_hash": self.hash,
                "payload": p,
            });
            body.push_str(&canonical(&line));
            body.push('\n');
        }
        self.put(self.path("jsonl"), body)
    }

    /// Two comment lines carry the hash and the config, then a header row.
    pub fn write_csv(
        &mut self,
        columns: &[&str],
        rows: &[Vec<String>],
        trailer: &[String],
    ) -> CliResult<()> {
        let mut body = format!(
            "# config_hash={}\n# config={}\n",
            self.hash,
            canonical(&self.config)
        );
        body.push_str(&columns.join(","));
        body.push('\n');
        for row in rows {
            body.push_str(&row.join(","));
            body.push('\n');
        }
        for line in trailer {
            body.push_str("# ");
            body.push_str(line);
            body.push('\n');
        }
        self.put(self.path("csv"), body)
    }

    pub fn write_svg(&mut self, plot: &Plot) -> CliResult<()> {
        let body = plot.render(&self.hash, &canonical(&self.config));
        self.put(self.path("svg"), body)
    }
}

/// Format a float for CSV with full round-trip precision.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}
