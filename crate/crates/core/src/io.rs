//! CSV ingestion driven by a TOML schema file.
//!
//! ```toml
//! metric = "high_risk"
//! metric_kind = "binary"        # or "continuous"
//! labels = "y"                  # optional ground-truth column
//!
//! [[columns]]
//! name = "education"
//! kind = "categorical"
//! alphabet = ["MBO12", "MBO34", "HBO", "WO"]
//!
//! [[columns]]
//! name = "income"
//! kind = "numeric"
//! ```
//!
//! The CSV must have a header row. Columns not named in the schema are
//! ignored. Empty cells are missing values; they are rejected unless the
//! caller asks for such rows to be dropped.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{Column, ColumnKind, Dataset, FeatureSchema, MetricKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaConfig {
    pub metric: String,
    pub metric_kind: MetricKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
    pub columns: Vec<Column>,
}

impl SchemaConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(format!("schema: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn feature_schema(&self) -> FeatureSchema {
        FeatureSchema::new(self.columns.clone(), self.metric_kind)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RowFilter {
    pub drop_missing: bool,
    /// `(column, value)` pairs; rows whose raw cell equals the value are dropped.
    pub exclude: Vec<(String, String)>,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: Dataset,
    /// Zero-based data-row number (header excluded) of each kept row.
    pub row_ids: Vec<usize>,
    pub dropped: usize,
}

pub fn read_csv_path(path: &Path, schema: &SchemaConfig, filter: &RowFilter) -> Result<Ingested> {
    read_csv(std::fs::File::open(path)?, schema, filter)
}

pub fn read_csv<R: Read>(reader: R, schema: &SchemaConfig, filter: &RowFilter) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let position: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();
    let find = |name: &str| {
        position.get(name).copied().ok_or_else(|| {
            Error::SchemaMismatch(format!("column {name:?} is declared in the schema but missing from the CSV header"))
        })
    };
    let feature_pos: Vec<usize> = schema.columns.iter().map(|c| find(&c.name)).collect::<Result<_>>()?;
    let metric_pos = find(&schema.metric)?;
    let label_pos = schema.labels.as_deref().map(find).transpose()?;
    let exclude: Vec<(usize, &str)> =
        filter.exclude.iter().map(|(c, v)| Ok((find(c)?, v.as_str()))).collect::<Result<_>>()?;

    let codes: Vec<Option<HashMap<&str, usize>>> = schema
        .columns
        .iter()
        .map(|c| match &c.kind {
            ColumnKind::Categorical { alphabet } => {
                Some(alphabet.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect())
            }
            _ => None,
        })
        .collect();

    let d = schema.columns.len();
    let mut cells = Vec::new();
    let mut metric = Vec::new();
    let mut labels = Vec::new();
    let mut row_ids = Vec::new();
    let mut dropped = 0;

    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let cell = |i: usize| record.get(i).map(str::trim).unwrap_or("");
        if exclude.iter().any(|&(i, v)| cell(i) == v) {
            dropped += 1;
            continue;
        }
        let mut used = feature_pos.clone();
        used.push(metric_pos);
        used.extend(label_pos);
        if used.iter().any(|&i| cell(i).is_empty()) {
            if filter.drop_missing {
                dropped += 1;
                continue;
            }
            return Err(Error::Parse(format!(
                "row {line}: missing value (use the drop-missing filter to skip such rows)"
            )));
        }
        for (j, (&pos, col)) in feature_pos.iter().zip(&schema.columns).enumerate() {
            let raw = cell(pos);
            let v = match &codes[j] {
                Some(map) => *map.get(raw).ok_or_else(|| {
                    Error::SchemaMismatch(format!(
                        "row {line}: value {raw:?} is not in the alphabet of column {:?}",
                        col.name
                    ))
                })? as f64,
                None => parse_number(raw, line, &col.name)?,
            };
            cells.push(v);
        }
        metric.push(parse_number(cell(metric_pos), line, &schema.metric)?);
        if let Some(pos) = label_pos {
            let v = parse_number(cell(pos), line, "labels")?;
            if v != 0.0 && v != 1.0 {
                return Err(Error::SchemaMismatch(format!("row {line}: label {v} is not binary")));
            }
            labels.push(v as u8);
        }
        row_ids.push(line);
    }
    let n = metric.len();
    let rows = Array2::from_shape_vec((n, d), cells).map_err(|e| Error::Parse(e.to_string()))?;
    let labels = label_pos.map(|_| labels);
    let dataset = Dataset::new(rows, metric, labels, schema.feature_schema())?;
    Ok(Ingested { dataset, row_ids, dropped })
}

fn parse_number(raw: &str, line: usize, column: &str) -> Result<f64> {
    raw.parse::<f64>()
        .map_err(|_| Error::Parse(format!("row {line}: column {column:?}: cannot parse {raw:?} as a number")))
}

/// Schema describing a dataset, e.g. to write next to a generated CSV.
pub fn schema_config_for(schema: &FeatureSchema, metric: &str) -> SchemaConfig {
    SchemaConfig {
        metric: metric.into(),
        metric_kind: schema.metric_kind,
        labels: None,
        columns: schema.columns.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &str = r#"
metric = "m"
metric_kind = "binary"

[[columns]]
name = "edu"
kind = "categorical"
alphabet = ["lo", "hi"]

[[columns]]
name = "x"
kind = "numeric"
"#;

    #[test]
    fn reads_categorical_and_numeric() {
        let schema = SchemaConfig::from_toml_str(SCHEMA).unwrap();
        let csv = "id,edu,x,m\n1,hi,0.5,1\n2,lo,-1,0\n";
        let got = read_csv(csv.as_bytes(), &schema, &RowFilter::default()).unwrap();
        assert_eq!(got.dataset.len(), 2);
        assert_eq!(got.dataset.rows().row(0).to_vec(), vec![1.0, 0.5]);
        assert_eq!(got.dataset.metric(), &[1.0, 0.0]);
        assert_eq!(got.row_ids, vec![0, 1]);
    }

    #[test]
    fn missing_column_is_a_schema_mismatch() {
        let schema = SchemaConfig::from_toml_str(SCHEMA).unwrap();
        let err = read_csv("edu,m\nhi,1\n".as_bytes(), &schema, &RowFilter::default()).unwrap_err();
        assert!(matches!(err, Error::SchemaMismatch(_)));
    }

    #[test]
    fn unknown_category_is_a_schema_mismatch() {
        let schema = SchemaConfig::from_toml_str(SCHEMA).unwrap();
        let err = read_csv("edu,x,m\nmid,1,1\n".as_bytes(), &schema, &RowFilter::default()).unwrap_err();
        assert!(matches!(err, Error::SchemaMismatch(_)));
    }

    #[test]
    fn missing_values_need_explicit_filter() {
        let schema = SchemaConfig::from_toml_str(SCHEMA).unwrap();
        let csv = "edu,x,m\nhi,,1\nlo,2,0\nunknown,3,0\n";
        assert!(read_csv(csv.as_bytes(), &schema, &RowFilter::default()).is_err());
        let filter = RowFilter { drop_missing: true, exclude: vec![("edu".into(), "unknown".into())] };
        let got = read_csv(csv.as_bytes(), &schema, &filter).unwrap();
        assert_eq!(got.dataset.len(), 1);
        assert_eq!(got.dropped, 2);
        assert_eq!(got.row_ids, vec![1]);
    }

    #[test]
    fn non_binary_metric_fails_validation() {
        let schema = SchemaConfig::from_toml_str(SCHEMA).unwrap();
        let err = read_csv("edu,x,m\nhi,1,0.5\n".as_bytes(), &schema, &RowFilter::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }
}
