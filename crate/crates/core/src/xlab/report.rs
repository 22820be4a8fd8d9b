//! CSV tables and JSON check records.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

/// 17 significant digits in scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

/// One verdict: what was checked, with which inputs, what was measured,
/// the tolerance applied and whether it passed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub params: Value,
    pub values: Value,
    pub tolerance: Value,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, params: Value, values: Value, tolerance: Value, pass: bool) -> Self {
        Self { name: name.into(), params, values, tolerance, pass }
    }
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| crate::Error::Parse(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Everything one subcommand emits, keyed by file name.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    hash: String,
    pub tables: Vec<(String, CsvTable)>,
    pub texts: Vec<(String, String)>,
    pub checks: Vec<CheckRecord>,
    /// Parallel to `checks`: whether the verdict counts toward the exit status.
    pub enforced: Vec<bool>,
    pub checks_file: String,
}

impl Bundle {
    pub fn new(hash: &str, checks_file: &str) -> Self {
        Self {
            hash: hash.to_string(),
            tables: Vec::new(),
            texts: Vec::new(),
            checks: Vec::new(),
            enforced: Vec::new(),
            checks_file: checks_file.to_string(),
        }
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// New table whose first column is the config hash.
    pub fn table(&self, header: &[&str]) -> CsvTable {
        let mut h = vec!["config_hash"];
        h.extend_from_slice(header);
        CsvTable::new(&h)
    }

    /// Row prefixed with the config hash.
    pub fn row(&self, cells: Vec<String>) -> Vec<String> {
        let mut r = Vec::with_capacity(cells.len() + 1);
        r.push(self.hash.clone());
        r.extend(cells);
        r
    }

    /// Copy of `t` with a leading config-hash column.
    pub fn tagged(&self, t: &CsvTable) -> CsvTable {
        let h: Vec<&str> = t.header().iter().map(String::as_str).collect();
        let mut out = self.table(&h);
        for r in t.rows() {
            out.push(self.row(r.clone()));
        }
        out
    }

    pub fn add_table(&mut self, name: &str, t: CsvTable) {
        self.tables.push((name.to_string(), t));
    }

    pub fn add_text(&mut self, name: &str, text: String) {
        self.texts.push((name.to_string(), text));
    }

    /// Records a check; `params` gains `config_hash` and `enforced` keys.
    pub fn check(&mut self, name: &str, params: Value, values: Value, tolerance: Value, pass: bool, enforced: bool) {
        let mut params = match params {
            Value::Object(m) => m,
            Value::Null => serde_json::Map::new(),
            other => {
                let mut m = serde_json::Map::new();
                m.insert("value".into(), other);
                m
            }
        };
        params.insert("config_hash".into(), Value::String(self.hash.clone()));
        params.insert("enforced".into(), Value::Bool(enforced));
        self.checks.push(CheckRecord::new(name, Value::Object(params), values, tolerance, pass));
        self.enforced.push(enforced);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().zip(&self.enforced).all(|(c, &e)| c.pass || !e)
    }

    pub fn failures(&self) -> Vec<&CheckRecord> {
        self.checks.iter().zip(&self.enforced).filter(|(c, &e)| e && !c.pass).map(|(c, _)| c).collect()
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        for (name, t) in &self.tables {
            t.write(dir.join(name))?;
        }
        for (name, text) in &self.texts {
            std::fs::write(dir.join(name), text)?;
        }
        write_json(dir.join(&self.checks_file), &self.checks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(1.0 / 3.0).parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(num(-2.5), "-2.5000000000000000e0");
    }

    #[test]
    fn csv_layout() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(vec![num(1.0), "x".into()]);
        assert_eq!(t.render(), "a,b\n1.0000000000000000e0,x\n");
    }

    #[test]
    fn bundle_tags_hash_and_tracks_enforcement() {
        let mut b = Bundle::new("abc", "checks.json");
        let mut t = b.table(&["x"]);
        t.push(b.row(vec![num(2.0)]));
        assert_eq!(t.render(), "config_hash,x\nabc,2.0000000000000000e0\n");
        b.check("soft", serde_json::json!({"k": 1}), Value::Null, Value::Null, false, false);
        assert!(b.pass());
        b.check("hard", Value::Null, Value::Null, Value::Null, false, true);
        assert!(!b.pass());
        assert_eq!(b.failures()[0].name, "hard");
        assert_eq!(b.checks[0].params["config_hash"], "abc");
    }
}
