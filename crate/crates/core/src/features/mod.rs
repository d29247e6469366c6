//! Pairwise synchrony and power features arranged as pattern images.

mod normalize;
mod pattern;
mod phase;
mod set;

pub use normalize::{normalize_patterns, NormStats, STD_FLOOR};
pub use pattern::{
    build_family_pattern, check_family_order, stack_patterns, FamilySource, FeatureFamily, PatternMatrix,
};
pub use phase::{default_entropy_bins, phase_entropy_rho, plv, relative_phases, wrap_phase};
pub use set::{PatternSet, CONTAINER_MAGIC, CONTAINER_VERSION};

use thiserror::Error;

use crate::dsp::DspError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("phase series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty phase series")]
    EmptySeries,
    #[error("entropy needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("patterns need at least 2 channels, got {0}")]
    TooFewChannels(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("families {0:?} are not unique and in order plv, energy, entropy")]
    FamilyOrder(Vec<FeatureFamily>),
    #[error("family {0} needs a different input (phases for plv/entropy, samples for energy)")]
    WrongSource(FeatureFamily),
    #[error("unknown feature family {0:?}")]
    UnknownFamily(String),
    #[error("pattern set lacks family {0}")]
    MissingFamily(FeatureFamily),
    #[error("empty pattern set")]
    EmptySet,
    #[error("pattern container: {0}")]
    Container(String),
    #[error(transparent)]
    Dsp(#[from] DspError),
}
