use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, Matrix};

/// One-hot expansion of categorical codes with optional standardization of
/// every expanded column. Fitted on training data only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct Encoder {
    kinds: Vec<ColumnKind>,
    /// Original column of each expanded column.
    pub(crate) source: Vec<usize>,
    means: Vec<f64>,
    scales: Vec<f64>,
}

impl Encoder {
    pub(crate) fn fit(x: &Matrix, kinds: &[ColumnKind], standardize: bool) -> Self {
        let mut source = Vec::new();
        for (j, k) in kinds.iter().enumerate() {
            match k {
                ColumnKind::Continuous => source.push(j),
                ColumnKind::Categorical { cardinality } => {
                    source.extend(std::iter::repeat_n(j, *cardinality))
                }
            }
        }
        let width = source.len();
        let mut enc = Self {
            kinds: kinds.to_vec(),
            source,
            means: vec![0.0; width],
            scales: vec![1.0; width],
        };
        if standardize && x.rows() > 0 {
            let raw = enc.expand(x);
            let n = raw.rows() as f64;
            for c in 0..width {
                let col = raw.column(c);
                let m = col.iter().sum::<f64>() / n;
                let v = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
                enc.means[c] = m;
                enc.scales[c] = if v > 1e-24 { v.sqrt() } else { 1.0 };
            }
        }
        enc
    }

    pub(crate) fn width(&self) -> usize {
        self.source.len()
    }

    fn expand(&self, x: &Matrix) -> Matrix {
        let width = self.width();
        let mut out = Matrix::zeros(x.rows(), width);
        for i in 0..x.rows() {
            let row = x.row(i);
            let dst = out.row_mut(i);
            let mut c = 0;
            for (j, k) in self.kinds.iter().enumerate() {
                match k {
                    ColumnKind::Continuous => {
                        dst[c] = row[j];
                        c += 1;
                    }
                    ColumnKind::Categorical { cardinality } => {
                        let code = row[j] as usize;
                        if code < *cardinality {
                            dst[c + code] = 1.0;
                        }
                        c += cardinality;
                    }
                }
            }
        }
        out
    }

    pub(crate) fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = self.expand(x);
        for i in 0..out.rows() {
            for (c, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.means[c]) / self.scales[c];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_hot_and_standardize() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![3.0, 2.0]]).unwrap();
        let kinds = [
            ColumnKind::Continuous,
            ColumnKind::Categorical { cardinality: 3 },
        ];
        let raw = Encoder::fit(&x, &kinds, false).transform(&x);
        assert_eq!(raw.row(0), &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(raw.row(1), &[3.0, 0.0, 0.0, 1.0]);
        let enc = Encoder::fit(&x, &kinds, true);
        let z = enc.transform(&x);
        assert_eq!(z.row(0)[0], -1.0);
        assert_eq!(z.row(1)[0], 1.0);
        // constant expanded column stays centred, unscaled
        assert_eq!(z.row(0)[2], 0.0);
        assert_eq!(enc.source, vec![0, 1, 1, 1]);
    }
}
