//! CSV tables whose headers carry units, e.g. `v_fe [V]`.
//!
//! Numbers are written in their shortest round-trip form, so reading a
//! table back reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::config::format_number;
use crate::transient::trace::{TraceSet, TRACE_COLUMNS};

/// Header of a numeric column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    /// Empty for columns without a unit; dimensionless quantities use `1`.
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Self {
            name: name.to_string(),
            unit: unit.to_string(),
        }
    }

    pub fn header(&self) -> String {
        if self.unit.is_empty() {
            self.name.clone()
        } else {
            format!("{} [{}]", self.name, self.unit)
        }
    }

    pub fn parse_header(h: &str) -> Self {
        let h = h.trim();
        match h.strip_suffix(']').and_then(|r| r.rsplit_once('[')) {
            Some((name, unit)) => Self::new(name.trim(), unit.trim()),
            None => Self::new(h, ""),
        }
    }
}

/// Column-major table: numeric columns followed by text columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<Column>,
    pub data: Vec<Vec<f64>>,
    pub text: Vec<(String, Vec<String>)>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, unit: &str, values: Vec<f64>) -> Self {
        self.push(name, unit, values);
        self
    }

    pub fn push(&mut self, name: &str, unit: &str, values: Vec<f64>) {
        self.columns.push(Column::new(name, unit));
        self.data.push(values);
    }

    pub fn push_text(&mut self, name: &str, values: Vec<String>) {
        self.text.push((name.to_string(), values));
    }

    pub fn rows(&self) -> usize {
        self.data
            .first()
            .map(Vec::len)
            .or_else(|| self.text.first().map(|t| t.1.len()))
            .unwrap_or(0)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        let k = self.columns.iter().position(|c| c.name == name)?;
        Some(&self.data[k])
    }

    pub fn unit(&self, name: &str) -> Option<&str> {
        self.columns.iter().find(|c| c.name == name).map(|c| c.unit.as_str())
    }

    /// Column `name`, which must exist and be in `unit`.
    pub fn require(&self, name: &str, unit: &str) -> Result<&[f64]> {
        let col = self
            .columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::Data(format!("missing column `{name}`")))?;
        let found = &self.columns[col].unit;
        if !unit_eq(found, unit) {
            return Err(Error::Data(format!(
                "column `{name}` is in `{found}`, expected `{unit}`"
            )));
        }
        Ok(&self.data[col])
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.rows();
        let lens = self
            .data
            .iter()
            .map(Vec::len)
            .chain(self.text.iter().map(|t| t.1.len()));
        for (k, len) in lens.enumerate() {
            if len != n {
                return Err(Error::Data(format!("column {k} has {len} rows, expected {n}")));
            }
        }
        Ok(())
    }

    pub fn to_writer<W: Write>(&self, w: W) -> Result<()> {
        self.check_shape()?;
        let mut out = csv::Writer::from_writer(w);
        let header = self
            .columns
            .iter()
            .map(Column::header)
            .chain(self.text.iter().map(|t| t.0.clone()));
        out.write_record(header)?;
        let mut record: Vec<String> = Vec::with_capacity(self.columns.len() + self.text.len());
        for i in 0..self.rows() {
            record.clear();
            record.extend(self.data.iter().map(|c| format_number(c[i])));
            record.extend(self.text.iter().map(|t| t.1[i].clone()));
            out.write_record(&record)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.to_writer(BufWriter::new(File::create(path)?))
    }

    /// Reads a table; columns listed in `text_columns` are kept as strings,
    /// every other column must be numeric.
    pub fn from_reader<R: Read>(r: R, text_columns: &[&str]) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(r);
        let headers: Vec<Column> = rdr.headers()?.iter().map(Column::parse_header).collect();
        let is_text: Vec<bool> = headers
            .iter()
            .map(|h| text_columns.contains(&h.name.as_str()))
            .collect();
        let mut t = Table::new();
        for (h, &txt) in headers.iter().zip(&is_text) {
            if txt {
                t.text.push((h.name.clone(), Vec::new()));
            } else {
                t.columns.push(h.clone());
                t.data.push(Vec::new());
            }
        }
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let (mut num, mut txt) = (0, 0);
            for (k, field) in rec.iter().enumerate() {
                if is_text[k] {
                    t.text[txt].1.push(field.to_string());
                    txt += 1;
                } else {
                    let v: f64 = field.parse().map_err(|_| {
                        Error::Data(format!(
                            "row {}, column `{}`: `{field}` is not a number",
                            row + 2,
                            headers[k].name
                        ))
                    })?;
                    t.data[num].push(v);
                    num += 1;
                }
            }
        }
        Ok(t)
    }

    pub fn read(path: &Path, text_columns: &[&str]) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        Self::from_reader(BufReader::new(file), text_columns)
    }
}

fn unit_eq(a: &str, b: &str) -> bool {
    use crate::io::config::normalize_unit;
    normalize_unit(a) == normalize_unit(b)
}

impl From<&TraceSet> for Table {
    fn from(tr: &TraceSet) -> Self {
        let mut t = Table::new();
        for ((name, unit), col) in TRACE_COLUMNS.iter().zip(tr.columns()) {
            t.push(name, unit, col.clone());
        }
        t.push_text("segment", tr.segment.clone());
        t
    }
}

impl TryFrom<&Table> for TraceSet {
    type Error = Error;

    fn try_from(t: &Table) -> Result<Self> {
        let mut tr = TraceSet::default();
        for ((name, unit), col) in TRACE_COLUMNS.iter().zip(tr.columns_mut()) {
            *col = t.require(name, unit)?.to_vec();
        }
        tr.segment = match t.text.iter().find(|c| c.0 == "segment") {
            Some(c) => c.1.clone(),
            None => vec![String::new(); tr.t.len()],
        };
        Ok(tr)
    }
}

pub fn write_trace(trace: &TraceSet, path: &Path) -> Result<()> {
    Table::from(trace).write(path)
}

pub fn read_trace(path: &Path) -> Result<TraceSet> {
    TraceSet::try_from(&Table::read(path, &["segment"])?)
}
