//! Number formatting and file writers shared by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

/// Six significant digits, switching to exponent form outside `[1e-4, 1e6)`.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Rounds every float in a JSON tree to six significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => sig6(f).parse::<f64>().map_or(Value::Number(n), |r| json!(r)),
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Provenance written at the top of every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub tolerances: Value,
    pub grid: Value,
}

impl Manifest {
    pub fn new(command: impl Into<String>, seed: Option<u64>, tolerances: Value, grid: Value) -> Self {
        Self {
            tool: "macs",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            seed,
            tolerances: round_json(tolerances),
            grid: round_json(grid),
        }
    }
}

/// CSV with a leading `# {manifest}` comment line.
pub fn write_csv(path: &Path, manifest: &Manifest, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut buf = format!("# {}\n", serde_json::to_string(manifest)?).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

/// JSON object `{ "manifest": …, "data": … }`, floats at six significant digits.
pub fn write_json<T: Serialize>(path: &Path, manifest: &Manifest, data: &T) -> Result<()> {
    let doc = json!({ "manifest": manifest, "data": round_json(serde_json::to_value(data)?) });
    let text = serde_json::to_string_pretty(&doc)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn output_path(dir: &Path, stem: &str, ext: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.join(format!("{stem}.{ext}")))
}

/// Left-aligned columns for terminal output.
pub fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|i| rows.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(header);
    for r in rows {
        out.push('\n');
        out.push_str(&line(r));
    }
    out
}
