use std::fmt::Write as _;

use serde::Serialize;

use super::EvalError;
use crate::dsp::BAND_COUNT;
use crate::features::{FeatureFamily, PatternSet};

pub const HISTOGRAM_BINS: usize = 64;

/// Distribution of one family's off-diagonal entries, split by class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyHistogram {
    pub family: FeatureFamily,
    pub low: f64,
    pub high: f64,
    pub seizure: Vec<u64>,
    pub non_seizure: Vec<u64>,
    pub seizure_mean: f64,
    pub non_seizure_mean: f64,
}

impl FamilyHistogram {
    pub fn bin_edges(&self, bin: usize) -> (f64, f64) {
        let w = (self.high - self.low) / HISTOGRAM_BINS as f64;
        (self.low + w * bin as f64, self.low + w * (bin + 1) as f64)
    }
}

/// 64-bin histograms of the upper-triangle entries (i < j) of every band
/// block. PLV and entropy bins span [0, 1]; energy bins span the observed
/// range.
pub fn feature_class_stats(set: &PatternSet, labels: &[bool]) -> Result<Vec<FamilyHistogram>, EvalError> {
    if labels.len() != set.len() {
        return Err(EvalError::LengthMismatch {
            scores: set.len(),
            labels: labels.len(),
        });
    }
    let n = set.n_channels();
    let cols = set.cols();
    let mut out = Vec::new();
    for (f, &family) in set.families().iter().enumerate() {
        let entries = |k: usize| {
            let p = set.pattern(k);
            (0..BAND_COUNT).flat_map(move |b| {
                (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| p[(b * n + i) * cols + f * n + j] as f64))
            })
        };
        let (low, high) = match family {
            FeatureFamily::Plv | FeatureFamily::Entropy => (0.0, 1.0),
            FeatureFamily::Energy => {
                let (lo, hi) = (0..set.len())
                    .flat_map(entries)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                if !lo.is_finite() {
                    (0.0, 1.0)
                } else if lo == hi {
                    (lo - 0.5, hi + 0.5)
                } else {
                    (lo, hi)
                }
            }
        };
        let mut hist = FamilyHistogram {
            family,
            low,
            high,
            seizure: vec![0; HISTOGRAM_BINS],
            non_seizure: vec![0; HISTOGRAM_BINS],
            seizure_mean: f64::NAN,
            non_seizure_mean: f64::NAN,
        };
        let (mut sums, mut counts) = ([0.0f64; 2], [0u64; 2]);
        let width = (high - low) / HISTOGRAM_BINS as f64;
        for (k, &label) in labels.iter().enumerate() {
            let bins = if label { &mut hist.seizure } else { &mut hist.non_seizure };
            for v in entries(k) {
                let bin = (((v - low) / width).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1);
                bins[bin] += 1;
                sums[label as usize] += v;
                counts[label as usize] += 1;
            }
        }
        if counts[1] > 0 {
            hist.seizure_mean = sums[1] / counts[1] as f64;
        }
        if counts[0] > 0 {
            hist.non_seizure_mean = sums[0] / counts[0] as f64;
        }
        out.push(hist);
    }
    Ok(out)
}

/// `family,bin,low,high,seizure,non_seizure`, one row per bin.
pub fn histograms_to_csv(hists: &[FamilyHistogram]) -> String {
    let mut out = String::from("family,bin,low,high,seizure,non_seizure\n");
    for h in hists {
        for b in 0..HISTOGRAM_BINS {
            let (lo, hi) = h.bin_edges(b);
            let _ = writeln!(out, "{},{b},{lo},{hi},{},{}", h.family, h.seizure[b], h.non_seizure[b]);
        }
    }
    out
}
