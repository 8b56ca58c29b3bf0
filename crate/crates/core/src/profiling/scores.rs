use super::{NoiseMatrix, SampleScore};
use crate::error::{Error, Result};
use crate::learners::CheckpointTrace;

/// Confidence, aleatoric uncertainty and variability from a checkpoint trace.
/// Hardness is `1 - confidence`.
pub fn training_dynamics_scores(trace: &CheckpointTrace) -> SampleScore {
    let n = trace.n();
    let t = trace.checkpoints() as f64;
    let mut confidence = Vec::with_capacity(n);
    let mut aleatoric = Vec::with_capacity(n);
    let mut variability = Vec::with_capacity(n);
    for i in 0..n {
        let p = trace.sample(i);
        let mean = p.iter().sum::<f64>() / t;
        let alea = p.iter().map(|v| v * (1.0 - v)).sum::<f64>() / t;
        let var = p.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t;
        confidence.push(mean.clamp(0.0, 1.0));
        aleatoric.push(alea.clamp(0.0, 0.25));
        variability.push(var.sqrt().clamp(0.0, 0.5));
    }
    SampleScore {
        hardness: confidence.iter().map(|c| 1.0 - c).collect(),
        confidence: Some(confidence),
        aleatoric: Some(aleatoric),
        variability: Some(variability),
        self_confidence: None,
        noise_matrix: None,
    }
}

fn check_oof(oof: &[[f64; 2]], labels: &[u8]) -> Result<()> {
    if oof.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} probability rows for {} labels",
            oof.len(),
            labels.len()
        )));
    }
    if let Some(i) = oof.iter().position(|r| ((r[0] + r[1]) - 1.0).abs() > 1e-6) {
        return Err(Error::InvalidInput(format!(
            "probability row {i} sums to {}",
            oof[i][0] + oof[i][1]
        )));
    }
    Ok(())
}

/// Self-confidence `oof[i][y_i]` and hardness `1 - self_confidence`, plus the
/// confident joint when both classes are present.
pub fn confident_learning_scores(oof: &[[f64; 2]], labels: &[u8]) -> Result<SampleScore> {
    check_oof(oof, labels)?;
    let self_confidence: Vec<f64> = oof
        .iter()
        .zip(labels)
        .map(|(r, &y)| r[y as usize])
        .collect();
    let noise_matrix = match estimate_noise_matrix(oof, labels) {
        Ok(m) => Some(m),
        Err(Error::SingleClass) => None,
        Err(e) => return Err(e),
    };
    Ok(SampleScore {
        hardness: self_confidence.iter().map(|s| 1.0 - s).collect(),
        self_confidence: Some(self_confidence),
        noise_matrix,
        ..SampleScore::default()
    })
}

/// Absorbs rounding in the per-class mean so a probability equal to the
/// threshold in exact arithmetic still passes it.
const THRESHOLD_SLACK: f64 = 1e-6;

/// Confident joint of given versus confidently predicted labels.
///
/// `t_k` is the mean predicted probability of class `k` over rows labelled
/// `k`. Row `i` is counted in `C[y_i][k*]`, where `k*` is the class with the
/// highest probability among those meeting their threshold (ties to the lower
/// class); rows meeting no threshold are not counted.
pub fn estimate_noise_matrix(oof: &[[f64; 2]], labels: &[u8]) -> Result<NoiseMatrix> {
    check_oof(oof, labels)?;
    let mut sums = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for (r, &y) in oof.iter().zip(labels) {
        sums[y as usize] += r[y as usize];
        counts[y as usize] += 1;
    }
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::SingleClass);
    }
    let thresholds = [sums[0] / counts[0] as f64, sums[1] / counts[1] as f64];
    let mut c = [[0u64; 2]; 2];
    for (r, &y) in oof.iter().zip(labels) {
        let mut pick: Option<usize> = None;
        for k in 0..2 {
            if r[k] >= thresholds[k] - THRESHOLD_SLACK && pick.is_none_or(|p| r[k] > r[p]) {
                pick = Some(k);
            }
        }
        if let Some(k) = pick {
            c[y as usize][k] += 1;
        }
    }
    let total: u64 = c.iter().flatten().sum();
    let mut joint = [[0.0; 2]; 2];
    if total > 0 {
        for a in 0..2 {
            for b in 0..2 {
                joint[a][b] = c[a][b] as f64 / total as f64;
            }
        }
    }
    Ok(NoiseMatrix {
        counts: c,
        joint,
        thresholds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(rows: &[&[f64]]) -> CheckpointTrace {
        let t = rows[0].len();
        CheckpointTrace::new(
            rows.len(),
            t,
            rows.iter().flat_map(|r| r.iter().copied()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn dynamics_examples() {
        let s = training_dynamics_scores(&trace(&[&[1.0, 1.0, 1.0], &[0.5, 0.5, 0.5]]));
        assert_eq!(s.confidence.as_ref().unwrap()[0], 1.0);
        assert_eq!(s.aleatoric.as_ref().unwrap()[0], 0.0);
        assert_eq!(s.variability.as_ref().unwrap()[0], 0.0);
        assert_eq!(s.aleatoric.as_ref().unwrap()[1], 0.25);
        assert_eq!(s.variability.as_ref().unwrap()[1], 0.0);

        // mean(0.2*0.8, 0.8*0.2) = 0.16; population sd of {0.2, 0.8} = 0.3
        let s = training_dynamics_scores(&trace(&[&[0.2, 0.8]]));
        assert!((s.confidence.unwrap()[0] - 0.5).abs() < 1e-12);
        assert!((s.aleatoric.unwrap()[0] - 0.16).abs() < 1e-12);
        assert!((s.variability.unwrap()[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn self_confidence_examples() {
        let s = confident_learning_scores(&[[0.9, 0.1], [0.9, 0.1]], &[0, 1]).unwrap();
        let sc = s.self_confidence.unwrap();
        assert_eq!(sc[0], 0.9);
        assert!((s.hardness[0] - 0.1).abs() < 1e-12);
        assert_eq!(sc[1], 0.1);
        assert!((s.hardness[1] - 0.9).abs() < 1e-12);
        assert!(confident_learning_scores(&[[0.9, 0.2]], &[0]).is_err());
    }

    #[test]
    fn perfect_predictions_have_diagonal_joint() {
        let oof = [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let m = estimate_noise_matrix(&oof, &[0, 0, 1]).unwrap();
        assert_eq!(m.counts, [[2, 0], [0, 1]]);
        assert_eq!(m.off_diagonal(), 0);
        assert!(estimate_noise_matrix(&oof, &[0, 0, 0]).is_err());
    }
}
