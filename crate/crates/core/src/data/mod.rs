//! Tabular datasets with binary labels.

mod csv_io;
mod noise;
mod simulate;
mod split;

pub use csv_io::{load_csv, write_csv, CsvOptions, KindHint};
pub use noise::{apply_flips, inject_label_noise, NoiseInjection};
pub use simulate::{simulate_dataset, simulate_with, CorrelationSource, SimulationSpec};
pub use split::{split_stratified, SplitPair};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "matrix buffer of length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} values, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            let r = self.row(i);
            data.extend(cols.iter().map(|&j| r[j]));
        }
        Matrix {
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols && self.rows > 0 && other.rows > 0 {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.cols,
            });
        }
        let cols = if self.rows > 0 { self.cols } else { other.cols };
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Matrix {
            rows: self.rows + other.rows,
            cols,
            data,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum ColumnKind {
    Continuous,
    Categorical { cardinality: usize },
}

impl ColumnKind {
    pub fn is_categorical(&self) -> bool {
        matches!(self, ColumnKind::Categorical { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    pub index: usize,
}

impl ColumnSchema {
    pub fn continuous(name: impl Into<String>, index: usize) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Continuous,
            index,
        }
    }

    pub fn categorical(name: impl Into<String>, index: usize, cardinality: usize) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical { cardinality },
            index,
        }
    }
}

/// Checks the schema invariants: unique names, indices forming a permutation
/// of `0..d`, categorical cardinality of at least two.
pub fn validate_schema(schema: &[ColumnSchema]) -> Result<()> {
    let d = schema.len();
    let mut seen_idx = vec![false; d];
    let mut names = HashSet::new();
    for c in schema {
        if c.index >= d || seen_idx[c.index] {
            return Err(Error::SchemaMismatch(format!(
                "column indices must be a permutation of 0..{d}"
            )));
        }
        seen_idx[c.index] = true;
        if !names.insert(c.name.as_str()) {
            return Err(Error::SchemaMismatch(format!(
                "duplicate column name {:?}",
                c.name
            )));
        }
        if let ColumnKind::Categorical { cardinality } = c.kind {
            if cardinality < 2 {
                return Err(Error::SchemaMismatch(format!(
                    "categorical column {:?} needs cardinality >= 2",
                    c.name
                )));
            }
        }
    }
    Ok(())
}

/// Schema plus an `n x d` feature matrix, binary labels and unique row ids.
///
/// Categorical columns hold integer codes `0..cardinality`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: Vec<ColumnSchema>,
    features: Matrix,
    labels: Vec<u8>,
    row_ids: Vec<u64>,
}

impl Dataset {
    pub fn new(
        schema: Vec<ColumnSchema>,
        features: Matrix,
        labels: Vec<u8>,
        row_ids: Vec<u64>,
    ) -> Result<Self> {
        validate_schema(&schema)?;
        if features.cols() != schema.len() {
            return Err(Error::DimensionMismatch {
                expected: schema.len(),
                got: features.cols(),
            });
        }
        let n = features.rows();
        if labels.len() != n || row_ids.len() != n {
            return Err(Error::InvalidInput(format!(
                "{n} feature rows but {} labels and {} row ids",
                labels.len(),
                row_ids.len()
            )));
        }
        if let Some(i) = labels.iter().position(|&y| y > 1) {
            return Err(Error::InvalidInput(format!(
                "label at row {i} is {}, expected 0 or 1",
                labels[i]
            )));
        }
        let mut ids = HashSet::with_capacity(n);
        if let Some(dup) = row_ids.iter().find(|id| !ids.insert(**id)) {
            return Err(Error::InvalidInput(format!("duplicate row id {dup}")));
        }
        for i in 0..n {
            for c in &schema {
                let v = features.get(i, c.index);
                if !v.is_finite() {
                    return Err(Error::MissingValue {
                        row: i,
                        col: c.index,
                    });
                }
                if let ColumnKind::Categorical { cardinality } = c.kind {
                    if v.fract() != 0.0 || v < 0.0 || v >= cardinality as f64 {
                        return Err(Error::InvalidInput(format!(
                            "categorical code {v} out of range in column {:?} at row {i}",
                            c.name
                        )));
                    }
                }
            }
        }
        Ok(Self {
            schema,
            features,
            labels,
            row_ids,
        })
    }

    /// Dataset with row ids `0..n`.
    pub fn with_sequential_ids(
        schema: Vec<ColumnSchema>,
        features: Matrix,
        labels: Vec<u8>,
    ) -> Result<Self> {
        let ids = (0..labels.len() as u64).collect();
        Self::new(schema, features, labels, ids)
    }

    pub fn empty(schema: Vec<ColumnSchema>) -> Self {
        let d = schema.len();
        Self {
            schema,
            features: Matrix::zeros(0, d),
            labels: Vec::new(),
            row_ids: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.schema.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    /// Schema entry describing matrix column `j`.
    pub fn column(&self, j: usize) -> &ColumnSchema {
        self.schema
            .iter()
            .find(|c| c.index == j)
            .expect("validated schema covers every column")
    }

    /// Column kinds in matrix column order.
    pub fn kinds(&self) -> Vec<ColumnKind> {
        (0..self.d()).map(|j| self.column(j).kind).collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&y| y == 1).count();
        [self.labels.len() - ones, ones]
    }

    pub fn require_both_classes(&self) -> Result<()> {
        let [c0, c1] = self.class_counts();
        if c0 == 0 || c1 == 0 {
            return Err(Error::SingleClass);
        }
        Ok(())
    }

    /// Rows at `idx`, in that order, keeping their row ids.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            row_ids: idx.iter().map(|&i| self.row_ids[i]).collect(),
        }
    }

    /// Same features and ids with replaced labels.
    pub fn with_labels(&self, labels: Vec<u8>) -> Result<Dataset> {
        Dataset::new(
            self.schema.clone(),
            self.features.clone(),
            labels,
            self.row_ids.clone(),
        )
    }

    /// Same rows, ids renumbered `0..n`.
    pub fn renumbered(mut self) -> Dataset {
        self.row_ids = (0..self.labels.len() as u64).collect();
        self
    }

    pub fn same_schema(&self, other: &Dataset) -> bool {
        self.schema == other.schema
    }

    pub fn require_same_schema(&self, other: &Dataset) -> Result<()> {
        if self.same_schema(other) {
            Ok(())
        } else {
            Err(Error::SchemaMismatch(
                "datasets do not share a schema".to_string(),
            ))
        }
    }

    /// Appends the rows of `other`; row ids must stay unique.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        self.require_same_schema(other)?;
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        let mut ids = self.row_ids.clone();
        ids.extend_from_slice(&other.row_ids);
        Dataset::new(
            self.schema.clone(),
            self.features.vstack(&other.features)?,
            labels,
            ids,
        )
    }
}
