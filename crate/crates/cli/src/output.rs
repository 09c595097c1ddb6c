//! Serialization of command results to standard output.

use std::io::Write;

use clap::ValueEnum;
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Reals in CSV use 17 significant digits so that values round-trip.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table with a fixed header.
#[derive(Debug, Clone, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Row) {
        debug_assert_eq!(row.0.len(), self.header.len());
        self.rows.push(row.0);
    }

    fn write_to(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builder for one CSV row.
#[derive(Debug, Clone, Default)]
pub struct Row(Vec<String>);

impl Row {
    pub fn new() -> Self {
        Row::default()
    }

    pub fn real(mut self, x: f64) -> Self {
        self.0.push(real(x));
        self
    }

    pub fn complex(self, z: Complex64) -> Self {
        self.real(z.re).real(z.im)
    }

    pub fn int(mut self, x: impl std::fmt::Display) -> Self {
        self.0.push(x.to_string());
        self
    }

    pub fn flag(mut self, b: bool) -> Self {
        self.0.push(b.to_string());
        self
    }
}

/// A result ready for either output format.
pub struct Rendered {
    pub json: serde_json::Value,
    pub table: Table,
}

impl Rendered {
    pub fn new(json: &impl Serialize, table: Table) -> serde_json::Result<Self> {
        Ok(Rendered {
            json: serde_json::to_value(json)?,
            table,
        })
    }

    pub fn write(&self, format: Format, mut out: impl Write) -> std::io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, &self.json)?;
                writeln!(out)
            }
            Format::Csv => self.table.write_to(out).map_err(std::io::Error::other),
        }
    }
}
