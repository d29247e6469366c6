//! End-to-end glue: recordings to pattern sets, pattern sets to trained
//! detectors and scores, plus synthetic cohorts for experiments.

mod cohort;
mod detector;
mod extract;

pub use cohort::{cohort_configs, synthesize_cohort, CohortSpec, SeizurePlacement};
pub use detector::{
    cross_validate, patterns_to_tensor, score_patterns, train_detector, CvFold, CvReport, DetectorConfig,
};
pub use extract::{extract_patterns, ExtractConfig};

use thiserror::Error;

use crate::dsp::DspError;
use crate::eval::EvalError;
use crate::features::FeatureError;
use crate::ingest::SynthError;
use crate::nn::NnError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{0}")]
    Invalid(String),
}
