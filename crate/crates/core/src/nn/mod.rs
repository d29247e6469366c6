//! A small feed-forward CNN with hand-written reverse-mode gradients.

mod adam;
mod gradcheck;
mod model_io;
mod network;
pub mod ops;
mod sensitivity;
mod tensor;
mod train;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{grad_check, GradCheckReport, GRAD_CHECK_STEP};
pub use model_io::{load_model, save_model, ModelEnvelope, ParamEntry, SavedModel, MODEL_FORMAT_VERSION};
pub use network::{ArchParams, Architecture, BackwardFault, Gradients, Init, LayerSpec, Network};
pub use sensitivity::input_sensitivity;
pub use tensor::Tensor;
pub use train::{train, EpochRecord, TrainConfig, TrainHistory};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("input has {input} channels but filters expect {filters}")]
    ChannelMismatch { input: usize, filters: usize },
    #[error("label {label} invalid for {classes} classes")]
    Label { label: usize, classes: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("model file {path}: {message}")]
    Model { path: String, message: String },
}
