use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{
    Profile, ProfileAssignment, ProfileMethod, ProfilerConfig, SampleScore, ThresholdMode,
    ThresholdRecord, DEFAULT_TAU, EASY_CONFIDENCE, HARD_CONFIDENCE,
};
use crate::data::NoiseInjection;
use crate::error::{Error, Result};
use crate::metrics::percentile;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileCounts {
    pub easy: usize,
    pub ambiguous: usize,
    pub hard: usize,
}

impl ProfileCounts {
    pub fn from_tags(tags: &[Profile]) -> Self {
        let mut c = Self::default();
        for t in tags {
            match t {
                Profile::Easy => c.easy += 1,
                Profile::Ambiguous => c.ambiguous += 1,
                Profile::Hard => c.hard += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.easy + self.ambiguous + self.hard
    }
}

fn require<'a>(v: &'a Option<Vec<f64>>, what: &str) -> Result<&'a Vec<f64>> {
    v.as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("scores lack {what}")))
}

/// Tags each sample Easy / Ambiguous / Hard under the configured rule.
pub fn assign_profiles(
    scores: &SampleScore,
    config: &ProfilerConfig,
    row_ids: &[u64],
) -> Result<ProfileAssignment> {
    config.validate()?;
    if row_ids.len() != scores.len() {
        return Err(Error::InvalidInput(format!(
            "{} row ids for {} scores",
            row_ids.len(),
            scores.len()
        )));
    }
    let (tags, threshold) = match config.method {
        ProfileMethod::Cleanlab => assign_cleanlab(scores, config)?,
        ProfileMethod::DataIq => {
            let u = require(&scores.aleatoric, "aleatoric uncertainty")?;
            assign_dynamics(require(&scores.confidence, "confidence")?, u, config)
        }
        ProfileMethod::DataMaps => {
            let u = require(&scores.variability, "variability")?;
            assign_dynamics(require(&scores.confidence, "confidence")?, u, config)
        }
    };
    Ok(ProfileAssignment {
        row_ids: row_ids.to_vec(),
        tags,
        method: config.method,
        threshold,
    })
}

fn assign_dynamics(
    confidence: &[f64],
    uncertainty: &[f64],
    config: &ProfilerConfig,
) -> (Vec<Profile>, ThresholdRecord) {
    let mut fallback = false;
    let effective = match config.mode {
        ThresholdMode::Value => config.tau,
        ThresholdMode::Default => DEFAULT_TAU,
        ThresholdMode::Percentile => {
            let first = uncertainty.first().copied().unwrap_or(0.0);
            if uncertainty.iter().all(|&u| u == first) {
                log::warn!(
                    "{}: all uncertainty scores equal {first}; percentile threshold falls back to value mode",
                    config.method
                );
                fallback = true;
                first
            } else {
                percentile(uncertainty, config.tau)
            }
        }
    };
    let tags = confidence
        .iter()
        .zip(uncertainty)
        .map(|(&c, &u)| {
            let certain = u < effective;
            if certain && c <= HARD_CONFIDENCE {
                Profile::Hard
            } else if certain && c >= EASY_CONFIDENCE {
                Profile::Easy
            } else {
                Profile::Ambiguous
            }
        })
        .collect();
    (
        tags,
        ThresholdRecord {
            mode: config.mode,
            tau: config.tau,
            effective,
            fallback,
        },
    )
}

fn assign_cleanlab(
    scores: &SampleScore,
    config: &ProfilerConfig,
) -> Result<(Vec<Profile>, ThresholdRecord)> {
    let sc = require(&scores.self_confidence, "self-confidence")?;
    let n = sc.len();
    let (tags, effective) = match config.mode {
        ThresholdMode::Value => (
            sc.iter()
                .map(|&s| {
                    if s < config.tau {
                        Profile::Hard
                    } else {
                        Profile::Easy
                    }
                })
                .collect(),
            config.tau,
        ),
        ThresholdMode::Default => {
            let m = scores
                .noise_matrix
                .as_ref()
                .map_or(0, |nm| nm.off_diagonal() as usize)
                .min(n);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| sc[a].total_cmp(&sc[b]).then(a.cmp(&b)));
            let mut tags = vec![Profile::Easy; n];
            for &i in &order[..m] {
                tags[i] = Profile::Hard;
            }
            (tags, m as f64)
        }
        ThresholdMode::Percentile => unreachable!("rejected by validate"),
    };
    Ok((
        tags,
        ThresholdRecord {
            mode: config.mode,
            tau: config.tau,
            effective,
            fallback: false,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_hard: usize,
    pub n_hard_correct: usize,
    pub n_flipped: usize,
}

/// Precision, recall and F1 of the Hard set against the flipped rows.
/// Degenerate ratios are 0.
pub fn detection_prf(assignment: &ProfileAssignment, injected: &NoiseInjection) -> Result<Prf> {
    let ids: HashSet<u64> = assignment.row_ids.iter().copied().collect();
    if let Some(id) = injected.flipped_ids.iter().find(|id| !ids.contains(id)) {
        return Err(Error::InvalidInput(format!(
            "flipped row {id} is not in the assignment"
        )));
    }
    let hard = assignment.ids_with(Profile::Hard);
    let n_hard = hard.len();
    let n_hard_correct = hard
        .iter()
        .filter(|id| injected.flipped_ids.contains(id))
        .count();
    let n_flipped = injected.n_flipped();
    let precision = if n_hard == 0 {
        0.0
    } else {
        n_hard_correct as f64 / n_hard as f64
    };
    let recall = if n_flipped == 0 {
        0.0
    } else {
        n_hard_correct as f64 / n_flipped as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Prf {
        precision,
        recall,
        f1,
        n_hard,
        n_hard_correct,
        n_flipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn dyn_scores(conf: &[f64], unc: &[f64]) -> SampleScore {
        SampleScore {
            confidence: Some(conf.to_vec()),
            aleatoric: Some(unc.to_vec()),
            variability: Some(unc.to_vec()),
            hardness: conf.iter().map(|c| 1.0 - c).collect(),
            ..SampleScore::default()
        }
    }

    #[test]
    fn dataiq_rules() {
        let s = dyn_scores(&[0.9, 0.2, 0.5, 0.9], &[0.05, 0.1, 0.1, 0.24]);
        let cfg = ProfilerConfig::new(ProfileMethod::DataIq);
        let a = assign_profiles(&s, &cfg, &[0, 1, 2, 3]).unwrap();
        assert_eq!(
            a.tags,
            vec![
                Profile::Easy,
                Profile::Hard,
                Profile::Ambiguous,
                Profile::Ambiguous
            ]
        );
        let cfg = ProfilerConfig::new(ProfileMethod::DataMaps);
        let b = assign_profiles(&s, &cfg, &[0, 1, 2, 3]).unwrap();
        assert_eq!(a.tags, b.tags);
    }

    #[test]
    fn percentile_and_fallback() {
        let s = dyn_scores(&[0.9, 0.9, 0.9, 0.9, 0.9], &[0.01, 0.02, 0.03, 0.04, 0.05]);
        let cfg = ProfilerConfig::new(ProfileMethod::DataIq)
            .with_threshold(ThresholdMode::Percentile, 50.0);
        let a = assign_profiles(&s, &cfg, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(a.threshold.effective, 0.03);
        assert_eq!(a.counts().easy, 2);
        let s = dyn_scores(&[0.9; 3], &[0.1; 3]);
        let a = assign_profiles(&s, &cfg, &[0, 1, 2]).unwrap();
        assert!(a.threshold.fallback);
        assert_eq!(a.threshold.effective, 0.1);
        assert_eq!(a.counts().ambiguous, 3);
    }

    #[test]
    fn cleanlab_modes() {
        let oof = [[0.95, 0.05], [0.1, 0.9], [0.85, 0.15], [0.3, 0.7]];
        let labels = [0, 1, 1, 1];
        let s = super::super::confident_learning_scores(&oof, &labels).unwrap();
        let cfg = ProfilerConfig::new(ProfileMethod::Cleanlab);
        let a = assign_profiles(&s, &cfg, &[10, 11, 12, 13]).unwrap();
        assert_eq!(a.ids_with(Profile::Hard), vec![12]);
        assert_eq!(a.counts().ambiguous, 0);

        let diag =
            super::super::confident_learning_scores(&[[1.0, 0.0], [0.0, 1.0]], &[0, 1]).unwrap();
        let cfg = ProfilerConfig::new(ProfileMethod::Cleanlab)
            .with_threshold(ThresholdMode::Default, 0.0);
        let a = assign_profiles(&diag, &cfg, &[0, 1]).unwrap();
        assert_eq!(a.counts().hard, 0);
    }

    #[test]
    fn prf_examples() {
        let assignment = ProfileAssignment {
            row_ids: vec![0, 1, 2, 3],
            tags: vec![Profile::Easy, Profile::Easy, Profile::Hard, Profile::Hard],
            method: ProfileMethod::Cleanlab,
            threshold: ThresholdRecord {
                mode: ThresholdMode::Value,
                tau: 0.2,
                effective: 0.2,
                fallback: false,
            },
        };
        let inj = NoiseInjection {
            proportion: 0.5,
            flipped_ids: BTreeSet::from([1, 2]),
        };
        let p = detection_prf(&assignment, &inj).unwrap();
        assert_eq!((p.precision, p.recall, p.f1), (0.5, 0.5, 0.5));

        let exact = NoiseInjection {
            proportion: 0.5,
            flipped_ids: BTreeSet::from([2, 3]),
        };
        let p = detection_prf(&assignment, &exact).unwrap();
        assert_eq!((p.precision, p.recall, p.f1), (1.0, 1.0, 1.0));

        let p = detection_prf(&assignment, &NoiseInjection::none()).unwrap();
        assert_eq!((p.recall, p.f1), (0.0, 0.0));

        let stray = NoiseInjection {
            proportion: 0.1,
            flipped_ids: BTreeSet::from([99]),
        };
        assert!(detection_prf(&assignment, &stray).is_err());
    }
}
