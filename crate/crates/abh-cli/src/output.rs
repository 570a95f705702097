//! Tables with a manifest header, rendered as CSV or JSON and written atomically.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    /// Flags exactly as given, minus the output path.
    pub args: Vec<String>,
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// A rectangular numeric table plus free-form notes.
#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Key/value annotations (peaks, warnings, skipped points).
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), notes: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.notes.push((key.to_string(), value.into()));
    }
}

/// Shortest round-trip scientific notation; Rust formatting ignores locale.
fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

pub fn render(manifest: &Manifest, table: &Table, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut s = String::new();
            s.push_str(&format!("# manifest: version={}\n", manifest.version));
            s.push_str(&format!("# manifest: command={}\n", manifest.command));
            s.push_str(&format!("# manifest: config_sha256={}\n", manifest.config_sha256));
            if let Some(seed) = manifest.seed {
                s.push_str(&format!("# manifest: seed={seed}\n"));
            }
            s.push_str(&format!("# manifest: args={}\n", manifest.args.join(" ")));
            for (k, v) in &table.notes {
                s.push_str(&format!("# {k}: {}\n", v.replace('\n', " ")));
            }
            s.push_str(&table.columns.join(","));
            s.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            s
        }
        Format::Json => {
            // non-finite numbers are not valid JSON, so they become strings
            let cell = |x: f64| if x.is_finite() { json!(x) } else { Value::String(num(x)) };
            let rows: Vec<Value> = table.rows.iter().map(|r| Value::Array(r.iter().map(|&x| cell(x)).collect())).collect();
            let notes: Vec<Value> = table.notes.iter().map(|(k, v)| json!({ "key": k, "value": v })).collect();
            let doc = json!({
                "manifest": manifest,
                "columns": table.columns,
                "rows": rows,
                "notes": notes,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
            s.push('\n');
            s
        }
    }
}

/// Writes through a temporary file in the same directory and renames it.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
