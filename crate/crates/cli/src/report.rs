//! Tabular results rendered as aligned text, CSV or JSON.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Aligned columns, numbers rounded for reading.
    Table,
    /// RFC 4180 CSV with a header row and full-precision numbers.
    Csv,
    /// Array of row objects.
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map(Cell::Num)
            .unwrap_or_else(|| Cell::Text(String::new()))
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    /// Decimal places per column in table mode.
    pub precision: Vec<usize>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    /// `columns` pairs each header with its display precision.
    pub fn new(name: &str, columns: &[(&str, usize)]) -> Self {
        Self {
            name: name.to_string(),
            headers: columns.iter().map(|(h, _)| h.to_string()).collect(),
            precision: columns.iter().map(|&(_, p)| p).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self
            .headers
            .iter()
            .map(|h| csv_field(h))
            .collect::<Vec<_>>()
            .join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => v.to_string(),
                    Cell::Int(v) => v.to_string(),
                    Cell::Bool(v) => v.to_string(),
                    Cell::Text(s) => csv_field(s),
                })
                .collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> =
                    self.headers
                        .iter()
                        .zip(row)
                        .map(|(h, c)| {
                            let v = match c {
                                Cell::Num(v) => serde_json::Number::from_f64(*v)
                                    .map_or(Value::Null, Value::Number),
                                Cell::Int(v) => Value::from(*v),
                                Cell::Bool(v) => Value::Bool(*v),
                                Cell::Text(s) => Value::String(s.clone()),
                            };
                            (h.clone(), v)
                        })
                        .collect();
                Value::Object(obj)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&rows).expect("rows serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.precision)
                    .map(|(c, &p)| match c {
                        Cell::Num(v) if v.is_finite() => format!("{v:.p$}"),
                        Cell::Num(v) => v.to_string(),
                        Cell::Int(v) => v.to_string(),
                        Cell::Bool(v) => if *v { "yes" } else { "no" }.to_string(),
                        Cell::Text(s) => s.clone(),
                    })
                    .collect()
            })
            .collect();
        let widths: Vec<usize> = self
            .headers
            .iter()
            .enumerate()
            .map(|(i, h)| {
                cells
                    .iter()
                    .map(|r| r[i].len())
                    .chain([h.len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let numeric: Vec<bool> = (0..self.headers.len())
            .map(|i| {
                self.rows
                    .iter()
                    .all(|r| matches!(r[i], Cell::Num(_) | Cell::Int(_)))
            })
            .collect();
        let line = |fields: &[String]| -> String {
            let parts: Vec<String> = fields
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    if numeric[i] {
                        format!("{f:>w$}", w = widths[i])
                    } else {
                        format!("{f:<w$}", w = widths[i])
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let mut out = line(&self.headers);
        out.push('\n');
        for r in &cells {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Where and how results go.
#[derive(Debug, Clone)]
pub struct Sink {
    pub format: Format,
    pub out_dir: Option<PathBuf>,
    pub verbose: u8,
}

impl Sink {
    pub fn render(&self, table: &Table) -> String {
        match self.format {
            Format::Table => table.to_text(),
            Format::Csv => table.to_csv(),
            Format::Json => table.to_json(),
        }
    }

    fn extension(&self) -> &'static str {
        match self.format {
            Format::Table => "txt",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    /// Writes each table to stdout, or to `<out_dir>/<name>.<ext>`.
    pub fn emit(&self, tables: &[&Table]) -> Result<()> {
        match &self.out_dir {
            Some(dir) => {
                for t in tables {
                    let path = dir.join(format!("{}.{}", t.name, self.extension()));
                    self.write_file(&path, &self.render(t))?;
                }
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                for (i, t) in tables.iter().enumerate() {
                    if tables.len() > 1 && self.format == Format::Table {
                        if i > 0 {
                            writeln!(stdout)?;
                        }
                        writeln!(stdout, "# {}", t.name)?;
                    }
                    stdout.write_all(self.render(t).as_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn write_file(&self, path: &PathBuf, contents: &str) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
        if self.verbose > 0 {
            eprintln!("wrote {}", path.display());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("t", &[("name", 0), ("value", 2)]);
        t.push(vec!["a,b".into(), (1.0 / 3.0).into()]);
        t
    }

    #[test]
    fn csv_quotes_and_keeps_precision() {
        assert_eq!(
            sample().to_csv(),
            "name,value\n\"a,b\",0.3333333333333333\n"
        );
    }

    #[test]
    fn text_rounds() {
        assert!(sample().to_text().contains("0.33\n"));
    }

    #[test]
    fn json_maps_nan_to_null() {
        let mut t = Table::new("t", &[("x", 1)]);
        t.push(vec![f64::NAN.into()]);
        assert!(t.to_json().contains("\"x\": null"));
    }
}
