//! Report writing: fixed-precision JSON, CSV and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

/// Pretty JSON with every non-integer number printed to six decimals.
pub fn to_fixed_json(value: &Value) -> String {
    let mut s = String::new();
    write_value(&mut s, value, 0);
    s.push('\n');
    s
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.push_str(&"  ".repeat(d));
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => {
            if n.is_f64() {
                let f = n.as_f64().unwrap();
                if f.is_finite() {
                    write!(out, "{:.6}", f).unwrap();
                } else {
                    out.push_str("null");
                }
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, item, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, depth + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

pub fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    write_text(path, &to_fixed_json(&serde_json::to_value(value)?))
}

/// Simple CSV: header plus rows of already formatted cells.
pub fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r
            .into_iter()
            .map(|c| {
                if c.contains([',', '"', '\n']) {
                    format!("\"{}\"", c.replace('"', "\"\""))
                } else {
                    c
                }
            })
            .collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// `report.json` -> `report.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Provenance for one run. The deterministic part (everything except timing)
/// is hashed; reports carry that hash.
pub struct RunManifest {
    subcommand: String,
    config: Value,
    inputs: Vec<(String, String)>,
    seed: u64,
    started: Instant,
    started_unix: u64,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: Value, seed: u64) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            config,
            inputs: Vec::new(),
            seed,
            started: Instant::now(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.inputs.push((path.display().to_string(), digest));
        Ok(())
    }

    pub fn input_opt(&mut self, path: Option<&Path>) -> Result<()> {
        match path {
            Some(p) => self.input(p),
            None => Ok(()),
        }
    }

    fn deterministic(&self) -> Value {
        json!({
            "subcommand": self.subcommand,
            "config": self.config,
            "inputs": self.inputs.iter().map(|(p, d)| json!({"path": p, "sha256": d})).collect::<Vec<_>>(),
            "seed": self.seed,
            "tool_version": env!("CARGO_PKG_VERSION"),
        })
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(to_fixed_json(&self.deterministic()).as_bytes()))
    }

    /// Full manifest, timing included.
    pub fn render(&self) -> String {
        let mut v = self.deterministic();
        let m: &mut Map<String, Value> = v.as_object_mut().unwrap();
        m.insert("sha256".into(), self.digest().into());
        m.insert("started_unix".into(), self.started_unix.into());
        m.insert("wall_time_s".into(), self.started.elapsed().as_secs_f64().into());
        m.insert("threads".into(), rayon::current_num_threads().into());
        to_fixed_json(&v)
    }

    /// Writes the manifest beside `report` and returns its hash.
    pub fn finish(&self, report: &Path) -> Result<String> {
        write_text(&sibling(report, "manifest.json"), &self.render())?;
        Ok(self.digest())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_get_six_decimals() {
        let v = json!({"a": 1.0, "b": [0.123456789, -1.0], "c": 3, "d": "x,y", "e": []});
        assert_eq!(
            to_fixed_json(&v),
            "{\n  \"a\": 1.000000,\n  \"b\": [\n    0.123457,\n    -1.000000\n  ],\n  \"c\": 3,\n  \"d\": \"x,y\",\n  \"e\": []\n}\n"
        );
    }

    #[test]
    fn csv_quotes_when_needed() {
        let s = csv_text(&["a", "b"], [vec!["1".into(), "x,\"y\"".into()]]);
        assert_eq!(s, "a,b\n1,\"x,\"\"y\"\"\"\n");
    }

    #[test]
    fn sibling_names() {
        assert_eq!(sibling(Path::new("out/r.json"), "csv"), PathBuf::from("out/r.csv"));
    }
}
