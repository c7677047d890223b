//! Output directory handling: `run.json`, reports and plots, each stamped
//! with the seed, the configuration hash and the corpus manifest hash.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const TOOL: &str = "phonoscope";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub manifest_sha256: Option<String>,
}

/// SHA-256 of the canonical (key-sorted, compact) JSON of `command` and
/// `config`.
pub fn config_hash(command: &str, config: &Value) -> String {
    let canonical = json!({ "command": command, "config": config });
    hex::encode(Sha256::digest(serde_json::to_vec(&canonical).expect("json value serializes")))
}

pub struct Run {
    out: PathBuf,
    pub meta: Meta,
}

impl Run {
    /// Creates `out` and writes `run.json`. `config` must hold every setting
    /// that affects results and nothing else.
    pub fn start(
        command: &str,
        config: &impl Serialize,
        seed: u64,
        manifest_sha256: Option<String>,
        out: &Path,
    ) -> CliResult<Self> {
        let config = serde_json::to_value(config).expect("config serializes");
        let meta = Meta {
            tool: TOOL,
            version: VERSION,
            command: command.into(),
            seed,
            config_hash: config_hash(command, &config),
            manifest_sha256,
        };
        fs::create_dir_all(out).map_err(|e| CliError::write(out, e))?;
        let run = Run { out: out.to_path_buf(), meta };
        run.write_text("run.json", &pretty(&json!({ "meta": run.meta, "config": config })))?;
        Ok(run)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_text(&self, name: &str, text: &str) -> CliResult<()> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| CliError::write(&path, e))?;
        info!("wrote {}", path.display());
        Ok(())
    }

    /// `{"meta": …, "report": body}`.
    pub fn json(&self, name: &str, body: &impl Serialize) -> CliResult<()> {
        self.write_text(name, &pretty(&json!({ "meta": self.meta, "report": body })))
    }

    /// CSV with a leading `#` metadata line.
    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let path = self.path(name);
        w.write_record(header).map_err(|e| CliError::write(&path, e))?;
        for r in rows {
            w.write_record(r).map_err(|e| CliError::write(&path, e))?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| CliError::write(&path, e))?).expect("utf-8 csv");
        self.write_text(name, &format!("{}\n{body}", self.stamp()))
    }

    /// SVG preceded by an XML comment carrying the metadata.
    pub fn svg(&self, name: &str, svg: &str) -> CliResult<()> {
        self.write_text(name, &format!("<!-- {} -->\n{svg}", self.stamp().trim_start_matches("# ")))
    }

    fn stamp(&self) -> String {
        let m = &self.meta;
        format!(
            "# {} {} {} seed={} config_hash={} manifest_sha256={}",
            m.tool,
            m.version,
            m.command,
            m.seed,
            m.config_hash,
            m.manifest_sha256.as_deref().unwrap_or("none")
        )
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes") + "\n"
}

/// Shortest round-trip decimal, empty for missing values.
pub fn num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
