use super::{AnnotationSet, Interval, Recording, SeizureClass};

/// Where an epoch came from and what it was labelled.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EpochMeta {
    pub patient_id: String,
    /// Position within the recording, in seconds.
    pub index: usize,
    pub class: SeizureClass,
}

/// One non-overlapping 1-second window.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub patient_id: String,
    pub index: usize,
    pub label: SeizureClass,
    /// `channels × samples_per_epoch`.
    pub window: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpochSet {
    pub epochs: Vec<Epoch>,
}

impl Epoch {
    pub fn meta(&self) -> EpochMeta {
        EpochMeta {
            patient_id: self.patient_id.clone(),
            index: self.index,
            class: self.label,
        }
    }
}

impl EpochSet {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }
}

/// Majority class over `[lo, hi)`. Uncovered time counts as background; a
/// tie between background and a seizure class goes to the seizure, and a
/// tie between seizure classes to the lower code.
pub fn epoch_label(intervals: &[Interval], lo: f64, hi: f64) -> SeizureClass {
    let mut cover = [0.0f64; 9];
    for iv in intervals.iter().filter(|iv| iv.class.is_seizure()) {
        cover[iv.class.code() as usize] += iv.overlap(lo, hi);
    }
    cover[0] = (hi - lo) - cover[1..].iter().sum::<f64>();
    let mut best = SeizureClass::Background;
    let mut best_cover = cover[0];
    for &class in &SeizureClass::ALL[1..] {
        let c = cover[class.code() as usize];
        let wins = c > best_cover || (best == SeizureClass::Background && c == best_cover);
        if c > 0.0 && wins {
            best = class;
            best_cover = c;
        }
    }
    best
}

/// Cuts ⌊duration⌋ consecutive 1-second epochs; the trailing partial second
/// is dropped.
pub fn segment_epochs(recording: &Recording, annotations: &AnnotationSet) -> EpochSet {
    let per_epoch = recording.sample_rate_hz().round() as usize;
    let count = recording.len() / per_epoch;
    let intervals = annotations.intervals(recording.patient_id());
    let epochs = (0..count)
        .map(|k| {
            let range = k * per_epoch..(k + 1) * per_epoch;
            Epoch {
                patient_id: recording.patient_id().to_string(),
                index: k,
                label: epoch_label(intervals, k as f64, (k + 1) as f64),
                window: recording.samples().iter().map(|s| s[range.clone()].to_vec()).collect(),
            }
        })
        .collect();
    EpochSet { epochs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::load_labels;

    fn rec(seconds: f64) -> Recording {
        let n = (seconds * 250.0).round() as usize;
        Recording::new(
            "p1",
            250.0,
            vec!["a".into(), "b".into()],
            vec![(0..n).map(|i| i as f64).collect(), vec![0.0; n]],
        )
        .unwrap()
    }

    #[test]
    fn drops_trailing_partial_second() {
        let set = segment_epochs(&rec(10.7), &AnnotationSet::new());
        assert_eq!(set.len(), 10);
        assert!(set.epochs.iter().all(|e| e.label == SeizureClass::Background));
        assert_eq!(set.epochs[3].window[0][0], 750.0);
        assert_eq!(set.epochs[3].window[0].len(), 250);
    }

    #[test]
    fn majority_with_tie_toward_seizure() {
        let labels = load_labels("patient_id,start_s,end_s,class\np1,3.0,7.5,1\n").unwrap();
        let set = segment_epochs(&rec(10.0), &labels);
        let seizure: Vec<usize> = set
            .epochs
            .iter()
            .filter(|e| e.label.is_seizure())
            .map(|e| e.index)
            .collect();
        assert_eq!(seizure, vec![3, 4, 5, 6, 7]);
    }

    #[test]
    fn minority_coverage_stays_background() {
        let iv = [Interval {
            start_s: 0.6,
            end_s: 3.0,
            class: SeizureClass::Tonic,
        }];
        assert_eq!(epoch_label(&iv, 0.0, 1.0), SeizureClass::Background);
        assert_eq!(epoch_label(&iv, 1.0, 2.0), SeizureClass::Tonic);
    }

    #[test]
    fn competing_seizure_classes() {
        let iv = [
            Interval { start_s: 0.0, end_s: 0.3, class: SeizureClass::Clonic },
            Interval { start_s: 0.3, end_s: 0.7, class: SeizureClass::Tonic },
            Interval { start_s: 0.7, end_s: 1.0, class: SeizureClass::Absence },
        ];
        assert_eq!(epoch_label(&iv, 0.0, 1.0), SeizureClass::Tonic);
        let tie = [
            Interval { start_s: 0.0, end_s: 0.5, class: SeizureClass::Clonic },
            Interval { start_s: 0.5, end_s: 1.0, class: SeizureClass::Tonic },
        ];
        assert_eq!(epoch_label(&tie, 0.0, 1.0), SeizureClass::Tonic);
    }
}
