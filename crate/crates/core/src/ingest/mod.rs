//! Recordings, label annotations, epoch segmentation and the synthetic
//! coupled-oscillator generator.

mod edf;
mod epochs;
mod labels;
mod synth;

pub use edf::{parse_edf, parse_edf_with, write_edf, EdfError, RateMode};
pub use epochs::{epoch_label, segment_epochs, Epoch, EpochMeta, EpochSet};
pub use labels::{load_labels, AnnotationSet, Interval, LabelError, SeizureClass};
pub use synth::{
    synthesize_recording, StateProfile, SynthConfig, SynthError, BACKGROUND_AMPLITUDE, SEIZURE_AMPLITUDE,
};

use thiserror::Error;

/// Canonical EEG sampling rate of the clinical corpus.
pub const CANONICAL_RATE_HZ: f64 = 250.0;

#[derive(Debug, Error, PartialEq)]
pub enum RecordingError {
    #[error("sample rate must be positive, got {0}")]
    BadRate(f64),
    #[error("a recording needs at least 2 channels, got {0}")]
    TooFewChannels(usize),
    #[error("channel {channel} has {len} samples, expected {expected}")]
    RaggedChannels {
        channel: usize,
        len: usize,
        expected: usize,
    },
    #[error("{labels} channel labels for {channels} channels")]
    LabelCount { labels: usize, channels: usize },
}

/// Multichannel EEG in physical units (µV), all channels sampled at one rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    patient_id: String,
    sample_rate_hz: f64,
    channels: Vec<String>,
    samples: Vec<Vec<f64>>,
}

impl Recording {
    pub fn new(
        patient_id: impl Into<String>,
        sample_rate_hz: f64,
        channels: Vec<String>,
        samples: Vec<Vec<f64>>,
    ) -> Result<Self, RecordingError> {
        if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
            return Err(RecordingError::BadRate(sample_rate_hz));
        }
        if samples.len() < 2 {
            return Err(RecordingError::TooFewChannels(samples.len()));
        }
        if channels.len() != samples.len() {
            return Err(RecordingError::LabelCount {
                labels: channels.len(),
                channels: samples.len(),
            });
        }
        let expected = samples[0].len();
        if let Some((channel, s)) = samples
            .iter()
            .enumerate()
            .find(|(_, s)| s.len() != expected)
        {
            return Err(RecordingError::RaggedChannels {
                channel,
                len: s.len(),
                expected,
            });
        }
        Ok(Self {
            patient_id: patient_id.into(),
            sample_rate_hz,
            channels,
            samples,
        })
    }

    pub fn patient_id(&self) -> &str {
        &self.patient_id
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn channel_count(&self) -> usize {
        self.samples.len()
    }

    pub fn len(&self) -> usize {
        self.samples[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz
    }

    /// Keeps only the named channels, in the order given.
    pub fn select_channels(&self, names: &[String]) -> Option<Recording> {
        let mut samples = Vec::with_capacity(names.len());
        for name in names {
            let idx = self
                .channels
                .iter()
                .position(|c| c.trim().eq_ignore_ascii_case(name.trim()))?;
            samples.push(self.samples[idx].clone());
        }
        Recording::new(self.patient_id.clone(), self.sample_rate_hz, names.to_vec(), samples).ok()
    }
}
