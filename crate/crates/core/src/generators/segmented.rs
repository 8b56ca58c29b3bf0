use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_generator, FittedGenerator, GeneratorSpec};
use crate::data::{ColumnSchema, Dataset, Matrix};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, derive_seed_indexed, rng_from_seed};

/// Which rows a segment was fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    /// Every training row (no segmentation).
    All,
    /// Easy rows; under two-way grouping also the Ambiguous ones.
    Easy,
    Ambiguous,
    Hard,
}

impl Segment {
    pub fn name(self) -> &'static str {
        match self {
            Segment::All => "all",
            Segment::Easy => "easy",
            Segment::Ambiguous => "ambiguous",
            Segment::Hard => "hard",
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentModel {
    pub tag: Segment,
    pub size: usize,
    pub fraction: f64,
    pub generator: FittedGenerator,
}

/// One generator per segment, sampled in proportion to segment sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedGenerator {
    schema: Vec<ColumnSchema>,
    segments: Vec<SegmentModel>,
}

pub const GENERATOR_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct GeneratorDocument {
    format: String,
    version: u32,
    generator: SegmentedGenerator,
}

const FORMAT_NAME: &str = "dcsynth-segmented-generator";

/// Fits one generator per segment. Segments with fewer than two rows cannot
/// be fitted and are dropped with a warning.
pub fn fit_segmented(
    spec: &GeneratorSpec,
    segments: Vec<(Segment, Dataset)>,
) -> Result<SegmentedGenerator> {
    spec.validate()?;
    let schema = match segments.first() {
        Some((_, d)) => d.schema().to_vec(),
        None => return Err(Error::InvalidInput("no segments to fit".into())),
    };
    for (_, d) in &segments {
        if d.schema() != schema.as_slice() {
            return Err(Error::SchemaMismatch(
                "segments have different schemas".into(),
            ));
        }
    }
    let kept: Vec<(usize, Segment, Dataset)> = segments
        .into_iter()
        .enumerate()
        .filter_map(|(i, (tag, d))| {
            if d.n() < 2 {
                log::warn!("dropping segment {tag} with {} rows", d.n());
                None
            } else {
                Some((i, tag, d))
            }
        })
        .collect();
    if kept.is_empty() {
        return Err(Error::InvalidInput("every segment is empty".into()));
    }
    let total: usize = kept.iter().map(|(_, _, d)| d.n()).sum();
    let fitted: Result<Vec<SegmentModel>> = kept
        .par_iter()
        .map(|(i, tag, d)| {
            let mut s = spec.clone();
            s.seed = derive_seed_indexed(spec.seed, "segment", *i as u64);
            Ok(SegmentModel {
                tag: *tag,
                size: d.n(),
                fraction: d.n() as f64 / total as f64,
                generator: fit_generator(&s, d)?,
            })
        })
        .collect();
    Ok(SegmentedGenerator {
        schema,
        segments: fitted?,
    })
}

/// Splits `n` over `sizes` by largest remainder; ties go to the earlier
/// segment. Exact integer arithmetic, so the counts always sum to `n`.
pub fn apportion(sizes: &[usize], n: usize) -> Vec<usize> {
    let total: u128 = sizes.iter().map(|&s| s as u128).sum();
    if total == 0 {
        return vec![0; sizes.len()];
    }
    let quotas: Vec<(u128, u128)> = sizes
        .iter()
        .map(|&s| {
            let q = s as u128 * n as u128;
            (q / total, q % total)
        })
        .collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.0 as usize).collect();
    let left = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| quotas[b].1.cmp(&quotas[a].1).then(a.cmp(&b)));
    for &i in order.iter().take(left) {
        counts[i] += 1;
    }
    counts
}

/// Largest-remainder split of `n` by nonnegative weights.
pub fn apportion_fractions(fractions: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = fractions.iter().sum();
    if fractions.is_empty() || total <= 0.0 {
        return vec![0; fractions.len()];
    }
    let quotas: Vec<f64> = fractions.iter().map(|f| f / total * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut assigned: usize = counts.iter().sum();
    // Rounding can overshoot by a unit when quotas sit on integers.
    while assigned > n {
        let i = (0..counts.len())
            .rev()
            .find(|&i| counts[i] > 0)
            .expect("positive count");
        counts[i] -= 1;
        assigned -= 1;
    }
    let rem: Vec<f64> = quotas
        .iter()
        .zip(&counts)
        .map(|(q, &c)| q - c as f64)
        .collect();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| rem[b].total_cmp(&rem[a]).then(a.cmp(&b)));
    for &i in order.iter().cycle().take(n - assigned) {
        counts[i] += 1;
    }
    counts
}

impl SegmentedGenerator {
    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn segments(&self) -> &[SegmentModel] {
        &self.segments
    }

    pub fn fractions(&self) -> Vec<(Segment, f64)> {
        self.segments.iter().map(|s| (s.tag, s.fraction)).collect()
    }

    /// Rows drawn from each segment for a sample of size `n`.
    pub fn counts_for(&self, n: usize) -> Vec<usize> {
        let sizes: Vec<usize> = self.segments.iter().map(|s| s.size).collect();
        apportion(&sizes, n)
    }

    /// Draws `n` rows, concatenates the segments and shuffles. Row ids are `0..n`.
    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        let d = self.schema.len();
        let mut values = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        for (i, (seg, count)) in self.segments.iter().zip(self.counts_for(n)).enumerate() {
            let mut rng = rng_from_seed(derive_seed_indexed(seed, "segment", i as u64));
            let (v, y) = seg.generator.sample_raw(count, &mut rng);
            values.extend(v);
            labels.extend(y);
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng_from_seed(derive_seed(seed, "segment/shuffle")));
        let mut shuffled = Vec::with_capacity(n * d);
        for &p in &perm {
            shuffled.extend_from_slice(&values[p * d..(p + 1) * d]);
        }
        let labels = perm.iter().map(|&p| labels[p]).collect();
        Dataset::with_sequential_ids(
            self.schema.clone(),
            Matrix::new(n, d, shuffled).expect("row-major buffer"),
            labels,
        )
        .expect("generated rows satisfy the training schema")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&GeneratorDocument {
            format: FORMAT_NAME.into(),
            version: GENERATOR_FORMAT_VERSION,
            generator: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: GeneratorDocument = serde_json::from_str(s)?;
        if doc.format != FORMAT_NAME {
            return Err(Error::Unsupported(format!(
                "not a generator document: {:?}",
                doc.format
            )));
        }
        if doc.version != GENERATOR_FORMAT_VERSION {
            return Err(Error::Unsupported(format!(
                "generator document version {} (supported: {GENERATOR_FORMAT_VERSION})",
                doc.version
            )));
        }
        Ok(doc.generator)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::simulate_dataset;
    use crate::generators::GeneratorKind;

    #[test]
    fn apportion_examples() {
        assert_eq!(apportion(&[800, 200], 1000), vec![800, 200]);
        assert_eq!(apportion(&[1, 1, 1], 10), vec![4, 3, 3]);
        assert_eq!(apportion(&[3, 7], 1), vec![0, 1]);
        assert_eq!(apportion(&[5, 5], 0), vec![0, 0]);
        assert_eq!(apportion_fractions(&[1.0 / 3.0; 3], 10), vec![4, 3, 3]);
        assert_eq!(apportion_fractions(&[0.8, 0.2], 1000), vec![800, 200]);
    }

    #[test]
    fn segmented_sampling_and_roundtrip() {
        let data = simulate_dataset(3, 500, 2).unwrap();
        let easy: Vec<usize> = (0..400).collect();
        let hard: Vec<usize> = (400..500).collect();
        let spec = GeneratorSpec::new(GeneratorKind::MarginalHist, 3);
        let g = fit_segmented(
            &spec,
            vec![
                (Segment::Easy, data.subset(&easy)),
                (Segment::Ambiguous, data.subset(&[])),
                (Segment::Hard, data.subset(&hard)),
            ],
        )
        .unwrap();
        assert_eq!(
            g.fractions(),
            vec![(Segment::Easy, 0.8), (Segment::Hard, 0.2)]
        );
        assert_eq!(g.counts_for(1000), vec![800, 200]);
        let s = g.sample(1000, 7);
        assert_eq!(s.n(), 1000);
        assert_eq!(s, g.sample(1000, 7));
        let back = SegmentedGenerator::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.sample(50, 1), g.sample(50, 1));
    }

    #[test]
    fn all_segments_empty_is_an_error() {
        let data = simulate_dataset(3, 10, 2).unwrap();
        let spec = GeneratorSpec::new(GeneratorKind::Gmm, 0);
        assert!(fit_segmented(&spec, vec![(Segment::Hard, data.subset(&[]))]).is_err());
    }

    #[test]
    fn rejects_foreign_documents() {
        assert!(
            SegmentedGenerator::from_json(r#"{"format":"x","version":1,"generator":null}"#)
                .is_err()
        );
    }
}
