//! `path,label` CSV manifests.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    /// As written in the manifest; see [`DatasetManifest::resolve`].
    pub path: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub records: Vec<ManifestRecord>,
    /// Distinct labels in first-seen order.
    pub classes: Vec<String>,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedManifest(msg.into())
}

impl DatasetManifest {
    pub fn new(records: Vec<ManifestRecord>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        if records.is_empty() {
            return Err(malformed("no records"));
        }
        let mut seen = std::collections::HashSet::new();
        let mut classes: Vec<String> = Vec::new();
        for (i, r) in records.iter().enumerate() {
            if r.path.is_empty() {
                return Err(malformed(format!("record {}: empty path", i + 1)));
            }
            if r.label.is_empty() {
                return Err(malformed(format!("record {}: empty label", i + 1)));
            }
            if !seen.insert(r.path.as_str()) {
                return Err(malformed(format!("duplicate path {:?}", r.path)));
            }
            if !classes.contains(&r.label) {
                classes.push(r.label.clone());
            }
        }
        Ok(Self {
            records,
            classes,
            base_dir: base_dir.into(),
        })
    }

    /// Parses manifest text; relative paths will resolve against `base_dir`.
    pub fn parse(text: &[u8], base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text);
        let header = reader.headers().map_err(|e| malformed(e.to_string()))?.clone();
        if header.len() != 2 || &header[0] != "path" || &header[1] != "label" {
            return Err(malformed("header must be exactly `path,label`"));
        }
        let mut records = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| malformed(e.to_string()))?;
            records.push(ManifestRecord {
                path: rec[0].to_string(),
                label: rec[1].to_string(),
            });
        }
        Self::new(records, base_dir)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(["path", "label"]).expect("in-memory write");
        for r in &self.records {
            w.write_record([&r.path, &r.label]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 fields")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn resolve(&self, record: &ManifestRecord) -> PathBuf {
        let p = Path::new(&record.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for r in &self.records {
            counts[self.class_index(&r.label).expect("label registered at construction")] += 1;
        }
        counts
    }
}
