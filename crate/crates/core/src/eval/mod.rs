//! ROC analysis and the evaluation protocols around it.

mod protocol;
mod roc;
mod stats;

pub use protocol::{kfold_patient_split, one_vs_rest, patient_specific_split, relabel_onset_window, undersample_balance};
pub use roc::{auc, optimal_cutoff, roc_curve, Cutoff, RocCurve, RocPoint, ScoredSet};
pub use stats::{feature_class_stats, histograms_to_csv, FamilyHistogram, HISTOGRAM_BINS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("{scores} items but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("score {0} outside [0, 1]")]
    ScoreRange(f64),
    #[error("need both classes, got {positives} positives and {negatives} negatives")]
    SingleClass { positives: usize, negatives: usize },
    #[error("{patients} patients cannot fill {folds} folds")]
    TooFewPatients { patients: usize, folds: usize },
    #[error("class code {0} is not a seizure type")]
    NotASeizureType(u8),
    #[error("fraction {0} outside (0, 1)")]
    Fraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
}

/// Metrics at the optimal cutoff, with optional nested reports (per seizure
/// type, subtasks).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub name: String,
    pub positives: usize,
    pub negatives: usize,
    pub auc: f64,
    /// Epochs scoring at or above this are called seizure.
    pub threshold: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub confusion: Confusion,
    #[serde(default)]
    pub per_type: Vec<EvalReport>,
    #[serde(default)]
    pub subtasks: Vec<EvalReport>,
}

impl EvalReport {
    pub fn from_scores(name: &str, set: &ScoredSet) -> Result<(Self, RocCurve), EvalError> {
        let curve = roc_curve(set)?;
        let area = auc(&curve);
        let cut = optimal_cutoff(&curve);
        let mut confusion = Confusion::default();
        for (&s, &l) in set.scores().iter().zip(set.labels()) {
            match (s >= cut.threshold, l) {
                (true, true) => confusion.true_positive += 1,
                (true, false) => confusion.false_positive += 1,
                (false, false) => confusion.true_negative += 1,
                (false, true) => confusion.false_negative += 1,
            }
        }
        let report = Self {
            name: name.to_string(),
            positives: set.positives(),
            negatives: set.len() - set.positives(),
            auc: area,
            threshold: cut.threshold,
            sensitivity: cut.sensitivity,
            specificity: cut.specificity,
            confusion,
            per_type: Vec::new(),
            subtasks: Vec::new(),
        };
        Ok((report, curve))
    }
}
