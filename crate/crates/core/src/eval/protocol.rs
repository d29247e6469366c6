//! Rebalancing, splitting and relabeling. Everything works on epoch
//! metadata or binary labels and returns indices, so the same selection
//! can be applied to a `PatternSet` with `subset`.

use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EvalError;
use crate::ingest::{EpochMeta, SeizureClass};

/// Keeps every positive and an equal-sized random subset of negatives,
/// drawn without replacement. Returned indices are ascending. If positives
/// outnumber negatives the input is returned whole, with a warning.
pub fn undersample_balance(labels: &[bool], seed: u64) -> Result<Vec<usize>, EvalError> {
    let positives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let negatives: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if positives.is_empty() || negatives.is_empty() {
        return Err(EvalError::SingleClass {
            positives: positives.len(),
            negatives: negatives.len(),
        });
    }
    if positives.len() > negatives.len() {
        warn!(
            "{} positives exceed {} negatives; not undersampling",
            positives.len(),
            negatives.len()
        );
        return Ok((0..labels.len()).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep: Vec<usize> = sample(&mut rng, negatives.len(), positives.len())
        .into_iter()
        .map(|k| negatives[k])
        .chain(positives)
        .collect();
    keep.sort_unstable();
    Ok(keep)
}

/// Shuffles the distinct patients and deals them round-robin into `k`
/// folds, so fold sizes differ by at most one.
pub fn kfold_patient_split(patients: &[String], k: usize, seed: u64) -> Result<Vec<Vec<String>>, EvalError> {
    let mut distinct: Vec<String> = patients.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if k == 0 || distinct.len() < k {
        return Err(EvalError::TooFewPatients {
            patients: distinct.len(),
            folds: k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    distinct.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (i, p) in distinct.into_iter().enumerate() {
        folds[i % k].push(p);
    }
    Ok(folds)
}

/// Positive exactly for epochs of `class`; other seizure types count as
/// negatives.
pub fn one_vs_rest(metas: &[EpochMeta], class: SeizureClass) -> Result<Vec<bool>, EvalError> {
    if !class.is_seizure() {
        return Err(EvalError::NotASeizureType(class.code()));
    }
    let labels: Vec<bool> = metas.iter().map(|m| m.class == class).collect();
    if !labels.iter().any(|&l| l) {
        warn!("no epochs of type {class}; one-vs-rest set has no positives");
    }
    Ok(labels)
}

/// Keeps only the first `window` epochs of each run of consecutive
/// positive epochs (per patient) positive.
pub fn relabel_onset_window(metas: &[EpochMeta], labels: &[bool], window: usize) -> Result<Vec<bool>, EvalError> {
    if metas.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: metas.len(),
            labels: labels.len(),
        });
    }
    let mut out = labels.to_vec();
    for idx in by_patient_chronological(metas).values() {
        let mut run = 0;
        let mut prev: Option<usize> = None;
        for &i in idx {
            let contiguous = prev.is_some_and(|p| labels[p] && metas[p].index + 1 == metas[i].index);
            run = if labels[i] { if contiguous { run + 1 } else { 1 } } else { 0 };
            if run > window {
                out[i] = false;
            }
            prev = Some(i);
        }
    }
    Ok(out)
}

/// Per patient, the chronologically first ⌊fraction · count⌋ epochs go to
/// the augmentation side, the rest stay for testing. Returns
/// `(augmentation, test)` indices, each ascending.
pub fn patient_specific_split(metas: &[EpochMeta], fraction: f64) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(EvalError::Fraction(fraction));
    }
    let mut augment = Vec::new();
    let mut test = Vec::new();
    for idx in by_patient_chronological(metas).values() {
        let cut = (fraction * idx.len() as f64).floor() as usize;
        augment.extend_from_slice(&idx[..cut]);
        test.extend_from_slice(&idx[cut..]);
    }
    augment.sort_unstable();
    test.sort_unstable();
    Ok((augment, test))
}

fn by_patient_chronological(metas: &[EpochMeta]) -> BTreeMap<&str, Vec<usize>> {
    let mut map: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, m) in metas.iter().enumerate() {
        map.entry(m.patient_id.as_str()).or_default().push(i);
    }
    for idx in map.values_mut() {
        idx.sort_by_key(|&i| (metas[i].index, i));
    }
    map
}
