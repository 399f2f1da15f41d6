//! Deterministic CSV/JSON emission for the experiment runner: comma
//! separated, `.` decimal, one header row, `#`-prefixed metadata lines
//! carrying the resolved configuration, every value in scientific notation
//! with 12 significant digits. Identical config + seed reproduce the bytes.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

/// 12 significant digits in scientific notation.
pub fn fmt_sci(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub config: BTreeMap<String, String>,
    pub table: Table,
    /// pass/fail lines from verification scenarios (empty otherwise)
    pub checks: Vec<crate::verify::PropertyResult>,
    /// free-form summary lines (fitted rates etc.), also emitted as
    /// trailing comment lines of the CSV
    pub notes: Vec<String>,
}

impl RunReport {
    pub fn new(scenario: impl Into<String>, config: BTreeMap<String, String>) -> Self {
        RunReport {
            scenario: scenario.into(),
            config,
            table: Table::new(&[]),
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn write_csv(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "# scenario={}", self.scenario)?;
        for (k, v) in &self.config {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(w, "{}", self.table.columns.join(","))?;
        for row in &self.table.rows {
            let line: Vec<String> = row.iter().map(|&x| fmt_sci(x)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        for c in &self.checks {
            writeln!(
                w,
                "# {} {}: {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.details
            )?;
        }
        for n in &self.notes {
            writeln!(w, "# {n}")?;
        }
        Ok(())
    }

    pub fn write_json(&self, w: &mut impl Write) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut *w, self)?;
        writeln!(w)
    }

    pub fn save(&self, dir: &Path, format: OutputFormat) -> io::Result<std::path::PathBuf> {
        std::fs::create_dir_all(dir)?;
        let ext = match format {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        };
        let path = dir.join(format!("{}.{ext}", self.scenario));
        let mut f = std::fs::File::create(&path)?;
        match format {
            OutputFormat::Csv => self.write_csv(&mut f)?,
            OutputFormat::Json => self.write_json(&mut f)?,
        }
        Ok(path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_and_determinism() {
        let mut cfg = BTreeMap::new();
        cfg.insert("p".to_string(), "1.5".to_string());
        let mut rep = RunReport::new("demo", cfg);
        rep.table = Table::new(&["h", "err"]);
        rep.table.push(vec![0.5, 1.0 / 3.0]);
        rep.notes.push("rate=1.0".into());
        let mut buf1 = Vec::new();
        rep.write_csv(&mut buf1).unwrap();
        let mut buf2 = Vec::new();
        rep.write_csv(&mut buf2).unwrap();
        assert_eq!(buf1, buf2);
        let text = String::from_utf8(buf1).unwrap();
        assert!(text.starts_with("# scenario=demo\n# p=1.5\nh,err\n"));
        assert!(text.contains("5.00000000000e-1,3.33333333333e-1"));
        assert!(text.trim_end().ends_with("# rate=1.0"));
    }

    #[test]
    fn sci_format_has_12_significant_digits() {
        assert_eq!(fmt_sci(1.0), "1.00000000000e0");
        assert_eq!(fmt_sci(-0.001234567890123), "-1.23456789012e-3");
    }
}
