//! Result rows and their CSV / JSONL serializations.
//!
//! CSV columns: `n,statistic,value,stderr,samples,tags`. `stderr` is empty
//! for exact quantities; `tags` is a `;`-separated list of `key=value` pairs.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: f64,
    pub statistic: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub samples: usize,
    pub tags: String,
}

impl ResultRow {
    pub fn new(n: f64, statistic: impl Into<String>, value: f64, stderr: Option<f64>, samples: usize) -> Self {
        Self { n, statistic: statistic.into(), value, stderr, samples, tags: String::new() }
    }

    pub fn tag(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        if !self.tags.is_empty() {
            self.tags.push(';');
        }
        self.tags.push_str(&format!("{key}={value}"));
        self
    }

    /// Value of tag `key`, if present.
    pub fn tag_value(&self, key: &str) -> Option<&str> {
        self.tags.split(';').find_map(|kv| kv.split_once('=').filter(|(k, _)| *k == key).map(|(_, v)| v))
    }
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Other(format!("csv: {e}")))?;
    }
    if rows.is_empty() {
        w.write_record(["n", "statistic", "value", "stderr", "samples", "tags"])
            .map_err(|e| HarnessError::Other(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Other(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn jsonl_string(rows: &[ResultRow]) -> String {
    let mut s = String::new();
    for r in rows {
        s.push_str(&serde_json::to_string(r).expect("rows serialize"));
        s.push('\n');
    }
    s
}

pub fn write_results(dir: &Path, rows: &[ResultRow]) -> Result<()> {
    write_file(&dir.join("results.csv"), csv_string(rows)?.as_bytes())?;
    write_file(&dir.join("results.jsonl"), jsonl_string(rows).as_bytes())
}

/// Writes through a temporary sibling so a crash never leaves a half-written file.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = std::fs::File::create(&tmp).map_err(|e| HarnessError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| HarnessError::io(&tmp, e))?;
    f.sync_all().map_err(|e| HarnessError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

/// Reads a results CSV; the error names the first offending row (1-based, header excluded).
pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_csv(&text).map_err(|(row, message)| HarnessError::MalformedRow { path: path.into(), row, message })
}

pub fn parse_csv(text: &str) -> std::result::Result<Vec<ResultRow>, (usize, String)> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| (0, e.to_string()))?.clone();
    let want = ["n", "statistic", "value", "stderr", "samples", "tags"];
    if headers.iter().ne(want) {
        return Err((0, format!("header must be {}, got {}", want.join(","), headers.iter().collect::<Vec<_>>().join(","))));
    }
    r.deserialize().enumerate().map(|(i, row)| row.map_err(|e| (i + 1, e.to_string()))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            ResultRow::new(8.0, "var_T", 1.25, Some(0.5), 200).tag("target", "T").tag("d", 2),
            ResultRow::new(16.0, "tail_c1", 0.1, None, 1000),
        ];
        let text = csv_string(&rows).unwrap();
        assert!(text.starts_with("n,statistic,value,stderr,samples,tags\n8.0,var_T,1.25,0.5,200,target=T;d=2\n"));
        assert!(text.contains("16.0,tail_c1,0.1,,1000,\n"));
        assert_eq!(parse_csv(&text).unwrap(), rows);
        assert_eq!(rows[0].tag_value("d"), Some("2"));
        assert_eq!(rows[0].tag_value("x"), None);
    }

    #[test]
    fn bad_rows_are_named() {
        let text = "n,statistic,value,stderr,samples,tags\n8,a,1,,2,\n8,b,oops,,2,\n";
        assert_eq!(parse_csv(text).unwrap_err().0, 2);
        assert_eq!(parse_csv("a,b\n").unwrap_err().0, 0);
        assert!(parse_csv("").unwrap().is_empty());
        assert!(parse_csv(&csv_string(&[]).unwrap()).unwrap().is_empty());
    }

    #[test]
    fn jsonl_has_one_object_per_row() {
        let rows = vec![ResultRow::new(8.0, "x", 1.0, None, 2), ResultRow::new(8.0, "y", 2.0, Some(0.1), 2)];
        let s = jsonl_string(&rows);
        assert_eq!(s.lines().count(), 2);
        let back: ResultRow = serde_json::from_str(s.lines().nth(1).unwrap()).unwrap();
        assert_eq!(back, rows[1]);
    }
}
