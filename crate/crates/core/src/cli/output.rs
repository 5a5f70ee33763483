//! CSV and JSON writers. Every float is written with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// A CSV table built in memory and written once.
pub struct Table {
    body: String,
    width: usize,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            body: format!("{}\n", header.join(",")),
            width: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.width);
        let escaped: Vec<String> = cells.iter().map(|c| escape(c)).collect();
        let _ = writeln!(self.body, "{}", escaped.join(","));
    }

    pub fn as_str(&self) -> &str {
        &self.body
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.body)
    }
}

fn escape(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

pub fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    body.push('\n');
    write_file(path, &body)
}

/// Seconds since the Unix epoch, stamped on reports.
pub fn timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// The report without its `timestamp` field, for comparing runs.
pub fn report_body(json: &str) -> Result<String> {
    let mut v: Value = serde_json::from_str(json).map_err(|e| Error::Io(e.to_string()))?;
    if let Value::Object(m) = &mut v {
        m.remove("timestamp");
    }
    serde_json::to_string_pretty(&v).map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_exactly() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(num(f64::NAN), "NaN");
    }

    #[test]
    fn table_escapes() {
        let mut t = Table::new(&["a", "b"]);
        t.row(&["x,y".into(), "1".into()]);
        assert_eq!(t.as_str(), "a,b\n\"x,y\",1\n");
    }

    #[test]
    fn body_drops_timestamp() {
        let a = report_body(r#"{"x": 1, "timestamp": 5}"#).unwrap();
        let b = report_body(r#"{"x": 1, "timestamp": 9}"#).unwrap();
        assert_eq!(a, b);
    }
}
