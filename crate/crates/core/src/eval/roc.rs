use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Scores with binary labels and the patient each one came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSet {
    patient_ids: Vec<String>,
    scores: Vec<f64>,
    labels: Vec<bool>,
}

impl ScoredSet {
    pub fn new(patient_ids: Vec<String>, scores: Vec<f64>, labels: Vec<bool>) -> Result<Self, EvalError> {
        if scores.len() != labels.len() || scores.len() != patient_ids.len() {
            return Err(EvalError::LengthMismatch {
                scores: scores.len(),
                labels: labels.len(),
            });
        }
        if let Some(&s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(EvalError::ScoreRange(s));
        }
        Ok(Self {
            patient_ids,
            scores,
            labels,
        })
    }

    /// Without patient provenance.
    pub fn anonymous(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self, EvalError> {
        Self::new(vec![String::new(); scores.len()], scores, labels)
    }

    pub fn patient_ids(&self) -> &[String] {
        &self.patient_ids
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }
}

/// An epoch is called positive when its score is `>= threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    points: Vec<RocPoint>,
    /// `(true positives, false positives)` per point, for exact comparisons.
    counts: Vec<(usize, usize)>,
    positives: usize,
    negatives: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub threshold: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

impl RocCurve {
    /// From (0,0) at threshold +∞ to (1,1) at the lowest score.
    pub fn points(&self) -> &[RocPoint] {
        &self.points
    }

    /// `fpr,tpr,threshold` with a header; +∞ is written as `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr,threshold\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{}", p.fpr, p.tpr, p.threshold);
        }
        out
    }
}

/// Sweeps thresholds over the distinct scores in descending order; equal
/// scores move the curve in a single (possibly diagonal) step.
pub fn roc_curve(set: &ScoredSet) -> Result<RocCurve, EvalError> {
    let p = set.positives();
    let n = set.len() - p;
    if p == 0 || n == 0 {
        return Err(EvalError::SingleClass {
            positives: p,
            negatives: n,
        });
    }
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&a, &b| set.scores[b].total_cmp(&set.scores[a]));
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let mut counts = vec![(0, 0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = set.scores[order[i]];
        while i < order.len() && set.scores[order[i]] == s {
            if set.labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n as f64,
            tpr: tp as f64 / p as f64,
            threshold: s,
        });
        counts.push((tp, fp));
    }
    Ok(RocCurve {
        points,
        counts,
        positives: p,
        negatives: n,
    })
}

/// Trapezoidal area.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Point maximizing sensitivity + specificity; on ties the lower
/// threshold (more sensitive) wins.
pub fn optimal_cutoff(curve: &RocCurve) -> Cutoff {
    // Se + Sp - 1 scaled by P·N, in integers so ties are exact
    let (p, n) = (curve.positives as i128, curve.negatives as i128);
    let gain = |k: usize| curve.counts[k].0 as i128 * n - curve.counts[k].1 as i128 * p;
    let mut best_k = 0;
    for k in 1..curve.points.len() {
        // points run in decreasing threshold, so `>=` prefers the later one
        if gain(k) >= gain(best_k) {
            best_k = k;
        }
    }
    let best = curve.points[best_k];
    Cutoff {
        threshold: best.threshold,
        sensitivity: best.tpr,
        specificity: 1.0 - best.fpr,
    }
}
