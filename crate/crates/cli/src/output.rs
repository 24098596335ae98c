use std::fs;
use std::io::Write;
use std::path::Path;

use crate::{CliError, Format, Global};

pub fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Markdown => "md",
        Format::Json => "json",
    }
}

/// Writes `text` to `<out-dir>/<stem>.<ext>` when `--out-dir` is set,
/// otherwise to stdout.
pub fn emit(global: &Global, stem: &str, text: &str) -> Result<(), CliError> {
    match &global.out_dir {
        Some(dir) => {
            let path = dir.join(format!("{stem}.{}", extension(global.format)));
            write_file(&path, text.as_bytes())
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Data(format!("writing stdout: {e}")))
        }
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Data(format!("creating {}: {e}", parent.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Data(format!("writing {}: {e}", path.display())))
}

/// Renders rows as CSV, a Markdown table or a JSON array of objects.
pub fn table(format: Format, header: &[&str], rows: &[Vec<String>]) -> String {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header).expect("in-memory write");
            for r in rows {
                w.write_record(r).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
        }
        Format::Markdown => {
            let mut s = format!("| {} |\n|{}\n", header.join(" | "), "---|".repeat(header.len()));
            for r in rows {
                s.push_str(&format!("| {} |\n", r.join(" | ")));
            }
            s
        }
        Format::Json => {
            let items: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    let obj = header
                        .iter()
                        .zip(r)
                        .map(|(k, v)| (k.to_string(), json_scalar(v)))
                        .collect::<serde_json::Map<_, _>>();
                    serde_json::Value::Object(obj)
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&items).expect("json values serialise");
            s.push('\n');
            s
        }
    }
}

/// Numbers stay numbers in JSON output; everything else is a string.
fn json_scalar(v: &str) -> serde_json::Value {
    if let Ok(i) = v.parse::<i64>() {
        return i.into();
    }
    match v.parse::<f64>() {
        Ok(f) if f.is_finite() && !v.is_empty() => serde_json::Number::from_f64(f).map_or(v.into(), Into::into),
        _ if v == "n/a" || v.is_empty() => serde_json::Value::Null,
        _ => v.into(),
    }
}
