//! Run manifests and the CSV/JSON writers that prefix every output with one.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Prefix of the manifest line in CSV outputs.
pub const MANIFEST_PREFIX: &str = "# manifest: ";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub specs: Vec<String>,
    pub parameters: serde_json::Map<String, Value>,
    /// Argument vector without the program name and `--out`.
    pub args: Vec<String>,
    pub tool_version: String,
    /// RFC 3339; taken from `SOURCE_DATE_EPOCH` when set.
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, specs: Vec<String>, parameters: Value) -> Self {
        let timestamp = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|s| s.trim().parse::<i64>().ok())
            .and_then(|t| chrono::DateTime::from_timestamp(t, 0))
            .unwrap_or_else(chrono::Utc::now)
            .to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
        RunManifest {
            command: command.to_string(),
            specs,
            parameters: match parameters {
                Value::Object(m) => m,
                _ => serde_json::Map::new(),
            },
            args: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
        }
    }

    /// Reads the manifest heading a CSV or JSON output file.
    pub fn read_from(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let bad = || CliError::Usage(format!("{} carries no run manifest", path.display()));
        if let Some(line) = text.lines().next().and_then(|l| l.strip_prefix(MANIFEST_PREFIX)) {
            return serde_json::from_str(line).map_err(|_| bad());
        }
        let v: Value = serde_json::from_str(&text).map_err(|_| bad())?;
        serde_json::from_value(v.get("manifest").cloned().ok_or_else(bad)?).map_err(|_| bad())
    }
}

/// Float with 17 significant digits.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Where outputs go: a directory, or stdout when none was given. On stdout only the
/// first output of a command is printed.
pub struct Sink {
    dir: Option<PathBuf>,
    printed: bool,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| CliError::Usage(format!("{}: {e}", d.display())))?;
        }
        Ok(Sink {
            dir,
            printed: false,
            written: Vec::new(),
        })
    }

    fn emit(&mut self, name: &str, body: &[u8]) -> Result<(), CliError> {
        match &self.dir {
            Some(d) => {
                let path = d.join(name);
                fs::write(&path, body).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                self.written.push(path);
            }
            None if self.printed => {}
            None => {
                self.printed = true;
                let mut out = std::io::stdout().lock();
                out.write_all(body).and_then(|_| out.flush()).map_err(|e| CliError::Usage(e.to_string()))?;
            }
        }
        Ok(())
    }

    /// CSV with a manifest comment line, a header row and LF endings.
    pub fn csv(&mut self, name: &str, manifest: &RunManifest, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut buf = Vec::new();
        buf.extend_from_slice(MANIFEST_PREFIX.as_bytes());
        buf.extend_from_slice(serde_json::to_string(manifest).expect("manifest serializes").as_bytes());
        buf.push(b'\n');
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut buf);
            w.write_record(header).map_err(|e| CliError::Usage(e.to_string()))?;
            for r in rows {
                w.write_record(r).map_err(|e| CliError::Usage(e.to_string()))?;
            }
            w.flush().map_err(|e| CliError::Usage(e.to_string()))?;
        }
        self.emit(name, &buf)
    }

    /// `{"manifest": .., "report": ..}`
    pub fn json(&mut self, name: &str, manifest: &RunManifest, report: &Value) -> Result<(), CliError> {
        let doc = serde_json::json!({ "manifest": manifest, "report": report });
        let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
        text.push('\n');
        self.emit(name, text.as_bytes())
    }
}
