//! Rendering of row data as aligned tables, CSV or JSON.

use std::io::{self, Write};

use clap::ValueEnum;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

/// Column headers plus string cells.
pub struct Rows {
    headers: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Rows {
    pub fn new(headers: &[&'static str]) -> Self {
        Rows {
            headers: headers.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn write_table<W: Write>(&self, mut out: W) -> io::Result<()> {
        let width = |i: usize| {
            self.rows
                .iter()
                .map(|r| r[i].chars().count())
                .chain([self.headers[i].chars().count()])
                .max()
                .unwrap_or(0)
        };
        let widths: Vec<usize> = (0..self.headers.len()).map(width).collect();
        let line = |cells: Vec<&str>| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
                .collect();
            padded.join("  ").trim_end().to_string()
        };
        writeln!(out, "{}", line(self.headers.clone()))?;
        for r in &self.rows {
            writeln!(out, "{}", line(r.iter().map(String::as_str).collect()))?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()
    }
}

pub fn write_json<W: Write>(mut out: W, value: &Value) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_columns_align() {
        let mut rows = Rows::new(&["k", "γ"]);
        rows.push(vec!["10".into(), "[[1,0],[0,1]]".into()]);
        rows.push(vec!["9".into(), "x".into()]);
        let mut buf = Vec::new();
        rows.write_table(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k   γ\n10  [[1,0],[0,1]]\n9   x\n");
    }

    #[test]
    fn csv_quotes_commas() {
        let mut rows = Rows::new(&["gamma"]);
        rows.push(vec!["[[1,0],[0,1]]".into()]);
        let mut buf = Vec::new();
        rows.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "gamma\n\"[[1,0],[0,1]]\"\n");
    }
}
