//! Dataset representation, schema validation and one-hot expansion.
//!
//! Features are stored as an `N x d` matrix of `f64`. Binary columns hold
//! 0/1 and categorical columns hold the index of the value in the column's
//! declared alphabet, so both splitters can work on the same storage.

use std::collections::HashSet;
use std::fmt;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Binary,
    Categorical { alphabet: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

impl Column {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self { name: name.into(), kind: ColumnKind::Numeric }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Self { name: name.into(), kind: ColumnKind::Binary }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, alphabet: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical { alphabet: alphabet.into_iter().map(Into::into).collect() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<Column>,
    pub metric_kind: MetricKind,
}

impl FeatureSchema {
    pub fn new(columns: Vec<Column>, metric_kind: MetricKind) -> Self {
        Self { columns, metric_kind }
    }

    /// `d` numeric columns named `x0..x{d-1}`.
    pub fn numeric(d: usize, metric_kind: MetricKind) -> Self {
        Self::new((0..d).map(|j| Column::numeric(format!("x{j}"))).collect(), metric_kind)
    }

    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn has_categorical(&self) -> bool {
        self.columns.iter().any(|c| matches!(c.kind, ColumnKind::Categorical { .. }))
    }

    pub fn has_numeric(&self) -> bool {
        self.columns.iter().any(|c| matches!(c.kind, ColumnKind::Numeric))
    }

    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for (j, c) in self.columns.iter().enumerate() {
            if c.name.is_empty() {
                out.push(Violation::EmptyColumnName { column: j });
            } else if !seen.insert(c.name.as_str()) {
                out.push(Violation::DuplicateColumn { name: c.name.clone() });
            }
            if let ColumnKind::Categorical { alphabet } = &c.kind {
                let distinct: HashSet<_> = alphabet.iter().collect();
                if alphabet.is_empty() || distinct.len() != alphabet.len() {
                    out.push(Violation::BadAlphabet { name: c.name.clone() });
                }
            }
        }
        out
    }
}

/// One problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    Empty,
    LengthMismatch { field: String, expected: usize, found: usize },
    ArityMismatch { expected: usize, found: usize },
    SchemaBreach { row: usize, column: String, value: f64, reason: String },
    NonBinaryMetric { row: usize, value: f64 },
    NonFiniteMetric { row: usize },
    NonBinaryLabel { row: usize, value: u8 },
    EmptyColumnName { column: usize },
    DuplicateColumn { name: String },
    BadAlphabet { name: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "dataset has no rows"),
            Violation::LengthMismatch { field, expected, found } => {
                write!(f, "length mismatch: {field} has {found} entries, expected {expected}")
            }
            Violation::ArityMismatch { expected, found } => {
                write!(f, "arity mismatch: rows have {found} columns, schema declares {expected}")
            }
            Violation::SchemaBreach { row, column, value, reason } => {
                write!(f, "schema breach at row {row}, column {column:?}: {value} ({reason})")
            }
            Violation::NonBinaryMetric { row, value } => {
                write!(f, "non-binary metric at row {row}: {value}")
            }
            Violation::NonFiniteMetric { row } => write!(f, "non-finite metric at row {row}"),
            Violation::NonBinaryLabel { row, value } => write!(f, "non-binary label at row {row}: {value}"),
            Violation::EmptyColumnName { column } => write!(f, "column {column} has an empty name"),
            Violation::DuplicateColumn { name } => write!(f, "duplicate column name {name:?}"),
            Violation::BadAlphabet { name } => {
                write!(f, "categorical column {name:?} needs a nonempty alphabet without duplicates")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationResult {
    Ok,
    Violations(Vec<Violation>),
}

impl ValidationResult {
    pub fn is_ok(&self) -> bool {
        matches!(self, ValidationResult::Ok)
    }

    pub fn violations(&self) -> &[Violation] {
        match self {
            ValidationResult::Ok => &[],
            ValidationResult::Violations(v) => v,
        }
    }

    pub fn into_result(self) -> Result<()> {
        match self {
            ValidationResult::Ok => Ok(()),
            ValidationResult::Violations(v) => Err(Error::Validation(v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    rows: Array2<f64>,
    metric: Vec<f64>,
    labels: Option<Vec<u8>>,
    schema: FeatureSchema,
}

impl Dataset {
    /// Builds a dataset and rejects it if [`validate`] reports anything.
    pub fn new(rows: Array2<f64>, metric: Vec<f64>, labels: Option<Vec<u8>>, schema: FeatureSchema) -> Result<Self> {
        let ds = Self::from_parts_unchecked(rows, metric, labels, schema);
        validate(&ds).into_result()?;
        Ok(ds)
    }

    pub fn from_parts_unchecked(
        rows: Array2<f64>,
        metric: Vec<f64>,
        labels: Option<Vec<u8>>,
        schema: FeatureSchema,
    ) -> Self {
        Self { rows, metric, labels, schema }
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn rows(&self) -> ArrayView2<'_, f64> {
        self.rows.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.rows.row(i)
    }

    pub fn metric(&self) -> &[f64] {
        &self.metric
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            rows: self.rows.select(Axis(0), indices),
            metric: indices.iter().map(|&i| self.metric[i]).collect(),
            labels: self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect()),
            schema: self.schema.clone(),
        }
    }

    pub fn with_metric(&self, metric: Vec<f64>, metric_kind: MetricKind) -> Result<Dataset> {
        let mut schema = self.schema.clone();
        schema.metric_kind = metric_kind;
        Dataset::new(self.rows.clone(), metric, self.labels.clone(), schema)
    }

    /// SHA-256 over the schema, features and metric, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.schema).unwrap_or_default());
        h.update((self.rows.nrows() as u64).to_le_bytes());
        h.update((self.rows.ncols() as u64).to_le_bytes());
        for v in self.rows.iter() {
            h.update(v.to_le_bytes());
        }
        for v in &self.metric {
            h.update(v.to_le_bytes());
        }
        if let Some(l) = &self.labels {
            h.update(l);
        }
        hex::encode(h.finalize())
    }
}

/// Checks every dataset invariant and reports all violations found.
pub fn validate(dataset: &Dataset) -> ValidationResult {
    let mut out = dataset.schema.violations();
    let n = dataset.rows.nrows();
    if n == 0 {
        out.push(Violation::Empty);
    }
    if dataset.metric.len() != n {
        out.push(Violation::LengthMismatch { field: "metric".into(), expected: n, found: dataset.metric.len() });
    }
    if let Some(labels) = &dataset.labels {
        if labels.len() != n {
            out.push(Violation::LengthMismatch { field: "labels".into(), expected: n, found: labels.len() });
        }
        for (row, &v) in labels.iter().enumerate() {
            if v > 1 {
                out.push(Violation::NonBinaryLabel { row, value: v });
            }
        }
    }
    let d = dataset.schema.arity();
    if dataset.rows.ncols() != d {
        out.push(Violation::ArityMismatch { expected: d, found: dataset.rows.ncols() });
    } else {
        for (row, values) in dataset.rows.outer_iter().enumerate() {
            for (col, &v) in dataset.schema.columns.iter().zip(values.iter()) {
                if let Some(reason) = entry_breach(&col.kind, v) {
                    out.push(Violation::SchemaBreach { row, column: col.name.clone(), value: v, reason });
                }
            }
        }
    }
    for (row, &v) in dataset.metric.iter().enumerate() {
        if !v.is_finite() {
            out.push(Violation::NonFiniteMetric { row });
        } else if dataset.schema.metric_kind == MetricKind::Binary && v != 0.0 && v != 1.0 {
            out.push(Violation::NonBinaryMetric { row, value: v });
        }
    }
    if out.is_empty() {
        ValidationResult::Ok
    } else {
        ValidationResult::Violations(out)
    }
}

fn entry_breach(kind: &ColumnKind, v: f64) -> Option<String> {
    match kind {
        ColumnKind::Numeric if !v.is_finite() => Some("numeric value must be finite".into()),
        ColumnKind::Numeric => None,
        ColumnKind::Binary if v != 0.0 && v != 1.0 => Some("binary value must be 0 or 1".into()),
        ColumnKind::Binary => None,
        ColumnKind::Categorical { alphabet } => {
            if v.fract() != 0.0 || v < 0.0 || v >= alphabet.len() as f64 {
                Some(format!("category code outside alphabet of size {}", alphabet.len()))
            } else {
                None
            }
        }
    }
}

/// Replaces each categorical column by one binary column per alphabet value,
/// named `column=value`. Other columns, the metric and labels pass through.
pub fn one_hot_expand(dataset: &Dataset) -> Dataset {
    let mut columns = Vec::new();
    let mut sources: Vec<(usize, Option<usize>)> = Vec::new();
    for (j, c) in dataset.schema.columns.iter().enumerate() {
        match &c.kind {
            ColumnKind::Categorical { alphabet } => {
                for (code, value) in alphabet.iter().enumerate() {
                    columns.push(Column::binary(format!("{}={}", c.name, value)));
                    sources.push((j, Some(code)));
                }
            }
            _ => {
                columns.push(c.clone());
                sources.push((j, None));
            }
        }
    }
    let n = dataset.len();
    let rows = Array2::from_shape_fn((n, columns.len()), |(i, k)| {
        let (j, code) = sources[k];
        let v = dataset.rows[[i, j]];
        match code {
            Some(code) => f64::from(u8::from(v == code as f64)),
            None => v,
        }
    });
    Dataset {
        rows,
        metric: dataset.metric.clone(),
        labels: dataset.labels.clone(),
        schema: FeatureSchema::new(columns, dataset.schema.metric_kind),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn schema_ab() -> FeatureSchema {
        FeatureSchema::new(vec![Column::categorical("c", ["A", "B"]), Column::numeric("x")], MetricKind::Binary)
    }

    #[test]
    fn conforming_dataset_is_ok() {
        let ds = Dataset::from_parts_unchecked(
            array![[0.0, 1.5], [1.0, -2.0], [0.0, 0.0]],
            vec![0.0, 1.0, 1.0],
            None,
            schema_ab(),
        );
        assert!(validate(&ds).is_ok());
    }

    #[test]
    fn length_mismatch_is_reported() {
        let ds = Dataset::from_parts_unchecked(
            array![[0.0, 1.5], [1.0, -2.0], [0.0, 0.0]],
            vec![0.0, 1.0],
            None,
            schema_ab(),
        );
        let r = validate(&ds);
        assert!(r.violations().iter().any(|v| v.to_string().contains("length mismatch")));
    }

    #[test]
    fn non_binary_metric_is_reported() {
        let ds = Dataset::from_parts_unchecked(array![[0.0, 1.0]], vec![0.5], None, schema_ab());
        let r = validate(&ds);
        assert!(r.violations().iter().any(|v| v.to_string().contains("non-binary metric")));
    }

    #[test]
    fn breaches_and_bad_schema_are_reported() {
        let schema = FeatureSchema::new(
            vec![Column::binary("b"), Column::binary("b"), Column::categorical("", Vec::<String>::new())],
            MetricKind::Continuous,
        );
        let ds = Dataset::from_parts_unchecked(array![[2.0, 0.0, 0.0]], vec![f64::NAN], Some(vec![3]), schema);
        let v = validate(&ds).violations().to_vec();
        assert!(v.contains(&Violation::DuplicateColumn { name: "b".into() }));
        assert!(v.contains(&Violation::EmptyColumnName { column: 2 }));
        assert!(v.contains(&Violation::BadAlphabet { name: "".into() }));
        assert!(v.contains(&Violation::NonFiniteMetric { row: 0 }));
        assert!(v.contains(&Violation::NonBinaryLabel { row: 0, value: 3 }));
        assert!(v.iter().any(|x| matches!(x, Violation::SchemaBreach { row: 0, .. })));
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let ds = Dataset::new(Array2::zeros((0, 2)), vec![], None, schema_ab());
        assert!(matches!(ds, Err(Error::Validation(v)) if v.contains(&Violation::Empty)));
    }

    #[test]
    fn one_hot_of_first_value() {
        let ds = Dataset::new(array![[0.0, 3.0]], vec![1.0], None, schema_ab()).unwrap();
        let oh = one_hot_expand(&ds);
        assert_eq!(oh.rows().row(0).to_vec(), vec![1.0, 0.0, 3.0]);
        assert_eq!(oh.schema().names(), vec!["c=A", "c=B", "x"]);
    }

    #[test]
    fn duo_like_schema_expands_to_seventeen_columns() {
        let schema = FeatureSchema::new(
            vec![
                Column::categorical("education", ["a", "b", "c", "d"]),
                Column::categorical("age", ["1", "2", "3", "4", "5"]),
                Column::categorical("distance", ["1", "2", "3", "4", "5", "6", "7", "8"]),
            ],
            MetricKind::Binary,
        );
        let rows = Array2::from_shape_fn((100, 3), |(i, j)| (i % [4, 5, 8][j]) as f64);
        let ds = Dataset::new(rows, vec![0.0; 100], None, schema).unwrap();
        let oh = one_hot_expand(&ds);
        assert_eq!(oh.schema().arity(), 17);
        assert_eq!(oh.len(), 100);
        assert_eq!(oh.metric(), ds.metric());
    }

    fn categorical_dataset() -> impl Strategy<Value = Dataset> {
        (prop::collection::vec(1usize..5, 1..4), 1usize..30)
            .prop_flat_map(|(sizes, n)| {
                let cells: Vec<_> = (0..n).map(|_| sizes.iter().map(|&s| 0..s).collect::<Vec<_>>()).collect();
                (Just(sizes), cells, prop::collection::vec(0u8..2, n))
            })
            .prop_map(|(sizes, cells, metric)| {
                let columns = sizes
                    .iter()
                    .enumerate()
                    .map(|(j, &s)| Column::categorical(format!("c{j}"), (0..s).map(|v| format!("v{v}"))))
                    .collect();
                let n = cells.len();
                let rows = Array2::from_shape_fn((n, sizes.len()), |(i, j)| cells[i][j] as f64);
                Dataset::new(
                    rows,
                    metric.into_iter().map(f64::from).collect(),
                    None,
                    FeatureSchema::new(columns, MetricKind::Binary),
                )
                .unwrap()
            })
    }

    proptest! {
        #[test]
        fn one_hot_round_trips_through_argmax(ds in categorical_dataset()) {
            let oh = one_hot_expand(&ds);
            prop_assert!(validate(&oh).is_ok());
            prop_assert_eq!(oh.len(), ds.len());
            let mut offset = 0;
            for (j, c) in ds.schema().columns.iter().enumerate() {
                let ColumnKind::Categorical { alphabet } = &c.kind else { unreachable!() };
                for i in 0..ds.len() {
                    let block: Vec<f64> = (0..alphabet.len()).map(|k| oh.rows()[[i, offset + k]]).collect();
                    prop_assert_eq!(block.iter().sum::<f64>(), 1.0);
                    let hot = block.iter().position(|&v| v == 1.0).unwrap();
                    prop_assert_eq!(hot as f64, ds.rows()[[i, j]]);
                }
                offset += alphabet.len();
            }
        }
    }
}
