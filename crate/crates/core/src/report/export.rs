use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AggregateRow, DeltaRow, GroupKey};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Csv,
    Json,
}

/// `x` rounded to 6 significant digits, printed in shortest form.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.5e}")
        .parse()
        .expect("scientific notation parses");
    rounded.to_string()
}

/// Flat row shared by aggregate and delta tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub group: Vec<String>,
    pub metric: String,
    pub mean: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n: usize,
    pub missing: usize,
}

impl From<&AggregateRow> for TableRow {
    fn from(r: &AggregateRow) -> Self {
        Self {
            group: r.group.clone(),
            metric: r.metric.clone(),
            mean: r.summary.map(|s| s.mean),
            ci_low: r.summary.map(|s| s.ci_low),
            ci_high: r.summary.map(|s| s.ci_high),
            n: r.n,
            missing: r.missing,
        }
    }
}

impl From<&DeltaRow> for TableRow {
    fn from(r: &DeltaRow) -> Self {
        Self {
            group: r.group.clone(),
            metric: r.metric.clone(),
            mean: r.summary.map(|s| s.mean),
            ci_low: r.summary.map(|s| s.ci_low),
            ci_high: r.summary.map(|s| s.ci_high),
            n: r.n,
            missing: r.unmatched,
        }
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(format_sig6).unwrap_or_default()
}

/// Writes rows with header `<group keys>,metric,mean,ci_low,ci_high,n,missing`
/// (CSV) or as an array of objects (JSON). Floats carry 6 significant digits.
pub fn export_rows(
    rows: &[TableRow],
    keys: &[GroupKey],
    format: ExportFormat,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    match format {
        ExportFormat::Csv => {
            let mut out = csv::Writer::from_writer(&mut w);
            let mut header: Vec<&str> = keys.iter().map(|k| k.name()).collect();
            header.extend(["metric", "mean", "ci_low", "ci_high", "n", "missing"]);
            out.write_record(&header)
                .map_err(|e| Error::Csv(e.to_string()))?;
            for r in rows {
                let mut rec = r.group.clone();
                rec.extend([
                    r.metric.clone(),
                    cell(r.mean),
                    cell(r.ci_low),
                    cell(r.ci_high),
                    r.n.to_string(),
                    r.missing.to_string(),
                ]);
                out.write_record(&rec)
                    .map_err(|e| Error::Csv(e.to_string()))?;
            }
            out.flush().map_err(io)?;
        }
        ExportFormat::Json => {
            let round = |v: Option<f64>| v.map(|x| format_sig6(x).parse::<f64>().unwrap_or(x));
            let docs: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    let mut obj = serde_json::Map::new();
                    for (k, v) in keys.iter().zip(&r.group) {
                        obj.insert(k.name().into(), v.clone().into());
                    }
                    obj.insert("metric".into(), r.metric.clone().into());
                    obj.insert("mean".into(), round(r.mean).into());
                    obj.insert("ci_low".into(), round(r.ci_low).into());
                    obj.insert("ci_high".into(), round(r.ci_high).into());
                    obj.insert("n".into(), r.n.into());
                    obj.insert("missing".into(), r.missing.into());
                    obj.into()
                })
                .collect();
            serde_json::to_writer_pretty(&mut w, &docs)?;
            writeln!(w).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Reads a CSV written by [`export_rows`] with `n_keys` group columns.
pub fn read_csv_rows(path: impl AsRef<Path>, n_keys: usize) -> Result<Vec<TableRow>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Csv(e.to_string()))?;
    let parse_opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|_| Error::Csv(format!("bad number {s:?}")))
        }
    };
    let parse_n = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Csv(format!("bad count {s:?}")))
    };
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        if rec.len() != n_keys + 6 {
            return Err(Error::Csv(format!(
                "expected {} fields, got {}",
                n_keys + 6,
                rec.len()
            )));
        }
        rows.push(TableRow {
            group: (0..n_keys).map(|i| rec[i].to_string()).collect(),
            metric: rec[n_keys].to_string(),
            mean: parse_opt(&rec[n_keys + 1])?,
            ci_low: parse_opt(&rec[n_keys + 2])?,
            ci_high: parse_opt(&rec[n_keys + 3])?,
            n: parse_n(&rec[n_keys + 4])?,
            missing: parse_n(&rec[n_keys + 5])?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_sig6(0.123456789), "0.123457");
        assert_eq!(format_sig6(1234567.0), "1234570");
        assert_eq!(format_sig6(0.5), "0.5");
        assert_eq!(format_sig6(-0.000012345678), "-0.0000123457");
    }

    #[test]
    fn csv_round_trip_and_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        export_rows(&[], &[GroupKey::Generator], ExportFormat::Csv, &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "generator,metric,mean,ci_low,ci_high,n,missing\n"
        );
        let rows = vec![TableRow {
            group: vec!["gmm".into()],
            metric: "auroc".into(),
            mean: Some(0.876543219),
            ci_low: Some(0.8),
            ci_high: None,
            n: 3,
            missing: 1,
        }];
        export_rows(&rows, &[GroupKey::Generator], ExportFormat::Csv, &path).unwrap();
        let back = read_csv_rows(&path, 1).unwrap();
        assert_eq!(back[0].mean, Some(0.876543));
        assert_eq!(back[0].ci_high, None);
        assert_eq!((back[0].n, back[0].missing), (3, 1));
        let json = dir.path().join("rows.json");
        export_rows(&rows, &[GroupKey::Generator], ExportFormat::Json, &json).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
        assert_eq!(v[0]["mean"], 0.876543);
        assert_eq!(v[0]["generator"], "gmm");
    }
}
