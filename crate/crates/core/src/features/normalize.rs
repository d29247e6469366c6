use serde::{Deserialize, Serialize};

use super::{FeatureError, PatternSet};

pub const STD_FLOOR: f64 = 1e-8;

/// Per-entry z-score statistics from a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn fit(set: &PatternSet) -> Result<Self, FeatureError> {
        if set.is_empty() {
            return Err(FeatureError::EmptySet);
        }
        let len = set.pattern_len();
        let n = set.len() as f64;
        let mut mean = vec![0.0; len];
        for i in 0..set.len() {
            for (m, &v) in mean.iter_mut().zip(set.pattern(i)) {
                *m += v as f64;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; len];
        for i in 0..set.len() {
            for ((s, &v), m) in var.iter_mut().zip(set.pattern(i)).zip(&mean) {
                let d = v as f64 - m;
                *s += d * d;
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt().max(STD_FLOOR)).collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, set: &mut PatternSet) -> Result<(), FeatureError> {
        let len = set.pattern_len();
        if self.mean.len() != len || self.std.len() != len {
            return Err(FeatureError::ShapeMismatch(format!(
                "statistics cover {} entries, patterns have {len}",
                self.mean.len()
            )));
        }
        for chunk in set.values_mut().chunks_mut(len) {
            for ((v, m), s) in chunk.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = ((*v as f64 - m) / s) as f32;
            }
        }
        Ok(())
    }
}

/// Z-scores every entry. Without `statistics` they are fitted on `set`
/// (training path); with them they are applied as-is (inference path).
/// Normalizing twice is not a no-op.
pub fn normalize_patterns(
    mut set: PatternSet,
    statistics: Option<&NormStats>,
) -> Result<(PatternSet, NormStats), FeatureError> {
    let stats = match statistics {
        Some(s) => s.clone(),
        None => NormStats::fit(&set)?,
    };
    stats.apply(&mut set)?;
    Ok((set, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureFamily;
    use crate::ingest::{EpochMeta, SeizureClass};

    fn set(rows: &[[f32; 28]]) -> PatternSet {
        let mut s = PatternSet::new(2, vec![FeatureFamily::Plv]).unwrap();
        for (i, r) in rows.iter().enumerate() {
            let meta = EpochMeta {
                patient_id: "p".into(),
                index: i,
                class: SeizureClass::Background,
            };
            s.push_raw(meta, r).unwrap();
        }
        s
    }

    #[test]
    fn fitted_statistics_standardize() {
        let mut rows = [[0.0f32; 28]; 5];
        for (i, r) in rows.iter_mut().enumerate() {
            for (j, v) in r.iter_mut().enumerate() {
                *v = if j == 3 { 7.0 } else { (i * (j + 1)) as f32 };
            }
        }
        let (norm, stats) = normalize_patterns(set(&rows), None).unwrap();
        for j in 0..28 {
            let col: Vec<f64> = (0..5).map(|i| norm.pattern(i)[j] as f64).collect();
            let mean = col.iter().sum::<f64>() / 5.0;
            assert!(mean.abs() < 1e-6);
            if stats.std[j] > STD_FLOOR {
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0;
                assert!((var.sqrt() - 1.0).abs() < 1e-5);
            } else {
                // constant entries collapse to zero
                assert!(col.iter().all(|&v| v == 0.0));
            }
        }
        assert_eq!(stats.std[3], STD_FLOOR);
    }

    #[test]
    fn not_idempotent() {
        let mut rows = [[0.0f32; 28]; 3];
        for (i, r) in rows.iter_mut().enumerate() {
            r.iter_mut().for_each(|v| *v = 10.0 * i as f32 + 3.0);
        }
        let (once, stats) = normalize_patterns(set(&rows), None).unwrap();
        let (twice, _) = normalize_patterns(once.clone(), Some(&stats)).unwrap();
        assert_ne!(once, twice);
    }

    #[test]
    fn empty_and_mismatch() {
        assert_eq!(normalize_patterns(set(&[]), None).unwrap_err(), FeatureError::EmptySet);
        let stats = NormStats { mean: vec![0.0; 3], std: vec![1.0; 3] };
        assert!(normalize_patterns(set(&[[1.0; 28]]), Some(&stats)).is_err());
    }
}
