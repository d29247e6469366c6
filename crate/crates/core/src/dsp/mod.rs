//! Band-pass filtering, analytic signals, instantaneous phase and power
//! spectra.

mod bands;
mod fir;
mod hilbert;
mod spectrum;

pub use bands::{Band, BandSet, BAND_COUNT};
pub use fir::{design_bandpass, filter_signal, FilterKernel, DEFAULT_TAPS};
pub use hilbert::{analytic_signal, instantaneous_phase, AnalyticSignal, Phase};
pub use spectrum::{band_log_power, periodogram, Periodogram, Spectrum, LOG_POWER_FLOOR};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DspError {
    #[error("band {high_hz} Hz is at or above Nyquist ({nyquist} Hz)")]
    AboveNyquist { high_hz: f64, nyquist: f64 },
    #[error("filter needs an odd tap count, got {0}")]
    EvenTaps(usize),
    #[error("signal of {signal} samples is shorter than the {kernel}-tap kernel")]
    SignalTooShort { signal: usize, kernel: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("band {low_hz}-{high_hz} Hz contains no spectrum bins")]
    EmptyBand { low_hz: f64, high_hz: f64 },
    #[error("invalid band set: {0}")]
    InvalidBands(String),
}
