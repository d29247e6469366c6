use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::eval::{auc, kfold_patient_split, roc_curve, undersample_balance, ScoredSet};
use crate::features::{normalize_patterns, PatternSet};
use crate::nn::{train, ArchParams, Architecture, Network, SavedModel, Tensor, TrainConfig, TrainHistory};

const SCORE_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub architecture: Architecture,
    pub arch: ArchParams,
    /// `train.seed` also drives undersampling and weight initialization.
    pub train: TrainConfig,
    pub undersample: bool,
}

impl DetectorConfig {
    pub fn new(architecture: Architecture, seed: u64) -> Self {
        Self {
            architecture,
            arch: ArchParams::default(),
            train: TrainConfig::new(seed),
            undersample: true,
        }
    }

    fn seed(&self, stream: u64) -> u64 {
        self.train.seed.wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }
}

/// `[n, rows, cols, 1]`.
pub fn patterns_to_tensor(set: &PatternSet) -> Result<Tensor, PipelineError> {
    if set.is_empty() {
        return Err(PipelineError::Invalid("pattern set is empty".into()));
    }
    let data = set.values().iter().map(|&v| v as f64).collect();
    Ok(Tensor::new(&[set.len(), set.rows(), set.cols(), 1], data)?)
}

/// Undersample (optional) → fit normalization → train. Parameters of the
/// returned model are rounded to `f32`, exactly as they are stored on disk.
pub fn train_detector(
    set: &PatternSet,
    labels: &[bool],
    config: &DetectorConfig,
) -> Result<(SavedModel, TrainHistory), PipelineError> {
    if labels.len() != set.len() {
        return Err(PipelineError::Invalid(format!("{} labels for {} patterns", labels.len(), set.len())));
    }
    let keep: Vec<usize> = if config.undersample {
        undersample_balance(labels, config.seed(1))?
    } else {
        (0..set.len()).collect()
    };
    let subset = set.subset(&keep);
    let y: Vec<usize> = keep.iter().map(|&i| labels[i] as usize).collect();
    let (normalized, stats) = normalize_patterns(subset, None)?;
    let x = patterns_to_tensor(&normalized)?;
    let mut network = Network::from_architecture(
        config.architecture,
        &config.arch,
        [set.rows(), set.cols(), 1],
        config.seed(2),
    )?;
    info!(
        "training {} ({} parameters) on {} patterns, {} positive",
        config.architecture,
        network.parameter_count(),
        y.len(),
        y.iter().sum::<usize>()
    );
    let history = train(&mut network, &x, &y, &config.train)?;
    for p in network.params_mut() {
        p.data_mut().iter_mut().for_each(|v| *v = *v as f32 as f64);
    }
    let model = SavedModel {
        architecture: config.architecture.name().to_string(),
        network,
        feature_families: set.families().to_vec(),
        normalization: stats,
        seed: config.train.seed,
    };
    Ok((model, history))
}

/// Seizure probability per pattern.
pub fn score_patterns(model: &SavedModel, set: &PatternSet) -> Result<Vec<f64>, PipelineError> {
    let [h, w, _] = model.network.input_shape();
    if set.families() != model.feature_families.as_slice() || set.rows() != h || set.cols() != w {
        return Err(PipelineError::Invalid(format!(
            "model expects {h}x{w} patterns of {:?}, got {}x{} of {:?}",
            model.feature_families,
            set.rows(),
            set.cols(),
            set.families()
        )));
    }
    let (normalized, _) = normalize_patterns(set.clone(), Some(&model.normalization))?;
    let mut scores = Vec::with_capacity(set.len());
    let indices: Vec<usize> = (0..set.len()).collect();
    for chunk in indices.chunks(SCORE_CHUNK) {
        let x = patterns_to_tensor(&normalized.subset(chunk))?;
        scores.extend(model.network.positive_scores(&x)?);
    }
    Ok(scores)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvFold {
    pub fold: usize,
    pub test_patients: Vec<String>,
    /// `None` when the held-out patients lack one of the classes.
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<CvFold>,
    /// Mean over folds with an AUC.
    pub mean_auc: f64,
}

/// Patient-wise k-fold cross-validation: each fold trains a fresh detector
/// on the other folds' patients and scores its own.
pub fn cross_validate(
    set: &PatternSet,
    labels: &[bool],
    k: usize,
    config: &DetectorConfig,
) -> Result<CvReport, PipelineError> {
    let folds = kfold_patient_split(&set.patients(), k, config.seed(3))?;
    let mut out = Vec::with_capacity(k);
    for (f, patients) in folds.into_iter().enumerate() {
        let (test, training): (Vec<usize>, Vec<usize>) =
            (0..set.len()).partition(|&i| patients.contains(&set.meta(i).patient_id));
        let train_labels: Vec<bool> = training.iter().map(|&i| labels[i]).collect();
        let (model, _) = train_detector(&set.subset(&training), &train_labels, config)?;
        let test_set = set.subset(&test);
        let scores = score_patterns(&model, &test_set)?;
        let test_labels: Vec<bool> = test.iter().map(|&i| labels[i]).collect();
        let ids = test_set.metas().iter().map(|m| m.patient_id.clone()).collect();
        let auc = match roc_curve(&ScoredSet::new(ids, scores, test_labels)?) {
            Ok(curve) => Some(auc(&curve)),
            Err(e) => {
                warn!("fold {f}: {e}; no AUC");
                None
            }
        };
        info!("fold {f}: patients {patients:?}, AUC {auc:?}");
        out.push(CvFold {
            fold: f,
            test_patients: patients,
            auc,
        });
    }
    let aucs: Vec<f64> = out.iter().filter_map(|f| f.auc).collect();
    if aucs.is_empty() {
        return Err(PipelineError::Invalid("no fold had both classes".into()));
    }
    let mean_auc = aucs.iter().sum::<f64>() / aucs.len() as f64;
    Ok(CvReport { folds: out, mean_auc })
}
