//! Recompute and check the config hash embedded in each output file.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::output::{config_hash, SCHEMA_VERSION};
use crate::svg::unescape;

const EXTENSIONS: [&str; 3] = ["jsonl", "csv", "svg"];

pub fn collect(paths: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| CliError::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.extension()
                        .and_then(|x| x.to_str())
                        .is_some_and(|x| EXTENSIONS.contains(&x))
                })
                .collect();
            entries.sort();
            out.extend(entries);
        } else if p.exists() {
            out.push(p.clone());
        } else {
            return Err(CliError::Usage(format!(
                "{}: no such file or directory",
                p.display()
            )));
        }
    }
    Ok(out)
}

/// Outer error: unreadable file. Inner: the verified hash, or why verification failed.
pub fn verify_file(path: &Path) -> CliResult<Result<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(match path.extension().and_then(|x| x.to_str()) {
        Some("jsonl") => verify_jsonl(&text),
        Some("csv") => verify_csv(&text),
        Some("svg") => verify_svg(&text),
        _ => Err("unrecognized file type".into()),
    })
}

fn check(config_text: &str, claimed: &str) -> Result<String, String> {
    let config: Value = serde_json::from_str(config_text)
        .map_err(|e| format!("embedded config is not JSON: {e}"))?;
    let actual = config_hash(&config);
    if actual == claimed {
        Ok(actual)
    } else {
        Err(format!(
            "config hash {claimed} does not match recomputed {actual}"
        ))
    }
}

fn verify_jsonl(text: &str) -> Result<String, String> {
    let mut lines = text.lines();
    let header: Value = serde_json::from_str(lines.next().ok_or("empty file")?)
        .map_err(|e| format!("header: {e}"))?;
    if header["schema_version"] != SCHEMA_VERSION {
        return Err(format!(
            "unsupported schema version {}",
            header["schema_version"]
        ));
    }
    let claimed = header["config_hash"]
        .as_str()
        .ok_or("header has no config_hash")?;
    let actual = config_hash(&header["config"]);
    if actual != claimed {
        return Err(format!(
            "config hash {claimed} does not match recomputed {actual}"
        ));
    }
    for (i, line) in lines.enumerate() {
        let rec: Value = serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 2))?;
        if rec["config_hash"] != actual.as_str() {
            return Err(format!("line {} carries a different config hash", i + 2));
        }
        if rec.get("payload").is_none() {
            return Err(format!("line {} has no payload", i + 2));
        }
    }
    Ok(actual)
}

fn verify_csv(text: &str) -> Result<String, String> {
    let mut lines = text.lines();
    let claimed = lines
        .next()
        .and_then(|l| l.strip_prefix("# config_hash="))
        .ok_or("missing config_hash line")?;
    let config = lines
        .next()
        .and_then(|l| l.strip_prefix("# config="))
        .ok_or("missing config line")?;
    check(config, claimed)
}

fn between<'a>(text: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = text.find(open)? + open.len();
    let len = text[start..].find(close)?;
    Some(&text[start..start + len])
}

fn verify_svg(text: &str) -> Result<String, String> {
    let claimed =
        between(text, "<!-- config_hash=", " -->").ok_or("missing config_hash comment")?;
    let config = between(text, r#"<metadata id="weylkit-config">"#, "</metadata>")
        .ok_or("missing config metadata")?;
    check(&unescape(config), claimed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_tamper_is_detected() {
        let cfg = serde_json::json!({"a": 1});
        let h = config_hash(&cfg);
        let good = format!("# config_hash={h}\n# config={{\"a\":1}}\nx\n1\n");
        assert_eq!(verify_csv(&good), Ok(h.clone()));
        let bad = format!("# config_hash={h}\n# config={{\"a\":2}}\nx\n1\n");
        assert!(verify_csv(&bad).is_err());
    }
}
