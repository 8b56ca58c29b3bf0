use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ColumnKind, ColumnSchema, Dataset, Matrix};
use crate::error::{Error, Result};

/// Integer-valued columns with at most this many distinct values are read as
/// categorical unless a hint says otherwise.
pub const CATEGORICAL_MAX_DISTINCT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindHint {
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CsvOptions {
    pub label_column: String,
    #[serde(default)]
    pub hints: BTreeMap<String, KindHint>,
}

impl CsvOptions {
    pub fn new(label_column: impl Into<String>) -> Self {
        Self {
            label_column: label_column.into(),
            hints: BTreeMap::new(),
        }
    }

    pub fn hint(mut self, column: impl Into<String>, kind: KindHint) -> Self {
        self.hints.insert(column.into(), kind);
        self
    }
}

/// Reads a headered CSV into a [`Dataset`].
///
/// The two raw label values map to `0` and `1` in ascending lexical order.
/// Row ids are the zero-based data row positions; error positions are
/// `(data row, file column)`, both zero-based.
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let label_pos = headers
        .iter()
        .position(|h| *h == opts.label_column)
        .ok_or_else(|| Error::UnknownColumn(opts.label_column.clone()))?;
    for name in opts.hints.keys() {
        if !headers.contains(name) {
            return Err(Error::UnknownColumn(name.clone()));
        }
    }

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        if rec.len() != headers.len() {
            return Err(Error::Csv(format!(
                "row {row} has {} fields, header has {}",
                rec.len(),
                headers.len()
            )));
        }
        for (col, v) in rec.iter().enumerate() {
            if v.is_empty() {
                return Err(Error::MissingValue { row, col });
            }
            cells[col].push(v.to_string());
        }
    }
    let n = cells[label_pos].len();

    let label_levels: BTreeSet<&str> = cells[label_pos].iter().map(String::as_str).collect();
    match label_levels.len() {
        2 => {}
        1 => return Err(Error::SingleClass),
        k => return Err(Error::LabelCardinality(k)),
    }
    let positive = *label_levels.iter().nth(1).expect("two levels");
    let labels: Vec<u8> = cells[label_pos]
        .iter()
        .map(|v| u8::from(v == positive))
        .collect();

    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != label_pos).collect();
    let mut schema = Vec::with_capacity(feature_cols.len());
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(feature_cols.len());
    for (j, &col) in feature_cols.iter().enumerate() {
        let name = &headers[col];
        let (kind, values) = parse_column(name, col, &cells[col], opts.hints.get(name).copied())?;
        schema.push(ColumnSchema {
            name: name.clone(),
            kind,
            index: j,
        });
        columns.push(values);
    }
    let d = columns.len();
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        data.extend(columns.iter().map(|c| c[i]));
    }
    Dataset::with_sequential_ids(schema, Matrix::new(n, d, data)?, labels)
}

fn parse_column(
    name: &str,
    col: usize,
    raw: &[String],
    hint: Option<KindHint>,
) -> Result<(ColumnKind, Vec<f64>)> {
    let parsed: Vec<Option<f64>> = raw
        .iter()
        .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
        .collect();
    let all_numeric = parsed.iter().all(Option::is_some);

    if hint == Some(KindHint::Categorical) && !all_numeric {
        // string categories: codes by lexical order
        let levels: BTreeSet<&str> = raw.iter().map(String::as_str).collect();
        if levels.len() < 2 {
            return Err(Error::SchemaMismatch(format!(
                "categorical column {name:?} has fewer than two levels"
            )));
        }
        let index: BTreeMap<&str, usize> =
            levels.iter().enumerate().map(|(k, v)| (*v, k)).collect();
        let values = raw.iter().map(|v| index[v.as_str()] as f64).collect();
        return Ok((
            ColumnKind::Categorical {
                cardinality: levels.len(),
            },
            values,
        ));
    }

    if let Some(row) = parsed.iter().position(Option::is_none) {
        return Err(Error::NonNumeric {
            row,
            col,
            column: name.to_string(),
            value: raw[row].clone(),
        });
    }
    let values: Vec<f64> = parsed.into_iter().map(|v| v.expect("checked")).collect();
    let integral = values.iter().all(|v| v.fract() == 0.0);
    let mut distinct: Vec<f64> = values.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();

    let categorical = match hint {
        Some(KindHint::Continuous) => false,
        Some(KindHint::Categorical) => {
            if distinct.len() < 2 {
                return Err(Error::SchemaMismatch(format!(
                    "categorical column {name:?} has fewer than two levels"
                )));
            }
            true
        }
        None => integral && distinct.len() >= 2 && distinct.len() <= CATEGORICAL_MAX_DISTINCT,
    };
    if !categorical {
        return Ok((ColumnKind::Continuous, values));
    }
    let codes = values
        .iter()
        .map(|v| {
            distinct
                .binary_search_by(|p| p.total_cmp(v))
                .expect("value drawn from column") as f64
        })
        .collect();
    Ok((
        ColumnKind::Categorical {
            cardinality: distinct.len(),
        },
        codes,
    ))
}

/// Writes features in column order followed by a `label_column` of 0/1.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>, label_column: &str) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let mut header: Vec<&str> = (0..data.d())
        .map(|j| data.column(j).name.as_str())
        .collect();
    header.push(label_column);
    w.write_record(&header)
        .map_err(|e| Error::Csv(e.to_string()))?;
    let kinds = data.kinds();
    for i in 0..data.n() {
        let mut rec: Vec<String> = data
            .features()
            .row(i)
            .iter()
            .zip(&kinds)
            .map(|(v, k)| match k {
                ColumnKind::Categorical { .. } => format!("{}", *v as i64),
                ColumnKind::Continuous => format!("{v}"),
            })
            .collect();
        rec.push(data.labels()[i].to_string());
        w.write_record(&rec)
            .map_err(|e| Error::Csv(e.to_string()))?;
    }
    let mut inner = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn labels_map_in_lexical_order() {
        let f = write_tmp("x,y\n1.5,b\n2.5,a\n3.5,a\n4.5,b\n");
        let ds = load_csv(f.path(), &CsvOptions::new("y")).unwrap();
        assert_eq!(ds.labels(), &[1, 0, 0, 1]);
        assert_eq!(ds.d(), 1);
        assert_eq!(ds.column(0).kind, ColumnKind::Continuous);
    }

    #[test]
    fn small_integer_columns_are_categorical() {
        let mut s = String::from("c,y\n");
        for i in 0..1000 {
            s.push_str(&format!("{},{}\n", i % 3, i % 2));
        }
        let f = write_tmp(&s);
        let ds = load_csv(f.path(), &CsvOptions::new("y")).unwrap();
        assert_eq!(
            ds.column(0).kind,
            ColumnKind::Categorical { cardinality: 3 }
        );
        let forced = load_csv(
            f.path(),
            &CsvOptions::new("y").hint("c", KindHint::Continuous),
        )
        .unwrap();
        assert_eq!(forced.column(0).kind, ColumnKind::Continuous);
    }

    #[test]
    fn empty_cell_is_reported_with_position() {
        let f = write_tmp("x,z,y\n1,2,a\n3,,b\n");
        let err = load_csv(f.path(), &CsvOptions::new("y")).unwrap_err();
        assert!(matches!(err, Error::MissingValue { row: 1, col: 1 }));
        assert_eq!(err.to_string(), "missing value at (1, 1)");
    }

    #[test]
    fn other_errors() {
        let f = write_tmp("x,y\nfoo,a\n2,b\n");
        assert!(matches!(
            load_csv(f.path(), &CsvOptions::new("y")),
            Err(Error::NonNumeric { .. })
        ));
        let f = write_tmp("x,y\n1,a\n2,a\n");
        assert!(matches!(
            load_csv(f.path(), &CsvOptions::new("y")),
            Err(Error::SingleClass)
        ));
        let f = write_tmp("x,y\n1,a\n2,b\n3,c\n");
        assert!(matches!(
            load_csv(f.path(), &CsvOptions::new("y")),
            Err(Error::LabelCardinality(3))
        ));
        assert!(matches!(
            load_csv("/nonexistent/file.csv", &CsvOptions::new("y")),
            Err(Error::Io { .. })
        ));
        let f = write_tmp("x,y\n1,a\n2,b\n");
        assert!(matches!(
            load_csv(f.path(), &CsvOptions::new("label")),
            Err(Error::UnknownColumn(_))
        ));
    }

    #[test]
    fn string_categories_with_hint() {
        let f = write_tmp("c,y\nred,0\nblue,1\nred,1\n");
        let ds = load_csv(
            f.path(),
            &CsvOptions::new("y").hint("c", KindHint::Categorical),
        )
        .unwrap();
        assert_eq!(
            ds.column(0).kind,
            ColumnKind::Categorical { cardinality: 2 }
        );
        assert_eq!(ds.features().column(0), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn write_then_load() {
        let f = write_tmp("x,c,y\n0.25,1,a\n-1.5,0,b\n3.0,1,b\n");
        let ds = load_csv(f.path(), &CsvOptions::new("y")).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_csv(&ds, out.path(), "y").unwrap();
        let back = load_csv(out.path(), &CsvOptions::new("y")).unwrap();
        assert_eq!(back, ds);
    }
}
