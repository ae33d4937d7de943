//! Feature matrices as CSV: `path,label,<feature names...>`, one row per
//! image, values written with 17 significant digits so they parse back to the
//! identical `f64`.

use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::FeatureSchema;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub path: String,
    pub label: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub schema: FeatureSchema,
    pub rows: Vec<FeatureRow>,
}

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidDataset(format!("feature CSV: {e}"))
}

impl FeatureTable {
    pub fn new(schema: FeatureSchema) -> Self {
        Self {
            schema,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: FeatureRow) -> Result<()> {
        if row.values.len() != self.schema.len() {
            return Err(Error::LengthMismatch(row.values.len(), self.schema.len()));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let header = ["path", "label"].into_iter().chain(self.schema.names());
        w.write_record(header).map_err(csv_err)?;
        for row in &self.rows {
            let mut record = vec![row.path.clone(), row.label.clone()];
            record.extend(row.values.iter().map(|&v| format_value(v)));
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidDataset(format!("feature CSV: {e}")))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = r.headers().map_err(csv_err)?.clone();
        if header.len() < 3 || &header[0] != "path" || &header[1] != "label" {
            return Err(Error::InvalidDataset(
                "feature CSV header must start with path,label and name at least one feature".into(),
            ));
        }
        let names: Vec<&str> = header.iter().skip(2).collect();
        let mut table = FeatureTable::new(FeatureSchema::from_names(&names)?);
        for (line, record) in r.records().enumerate() {
            let record = record.map_err(csv_err)?;
            let values = record
                .iter()
                .skip(2)
                .map(|s| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::InvalidDataset(format!("row {}: bad value {s:?}", line + 2)))
                })
                .collect::<Result<Vec<_>>>()?;
            table.push(FeatureRow {
                path: record[0].to_string(),
                label: record[1].to_string(),
                values,
            })?;
        }
        Ok(table)
    }
}
