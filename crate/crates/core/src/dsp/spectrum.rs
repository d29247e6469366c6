use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{BandSet, DspError, BAND_COUNT};

/// Added to mean band power before the log.
pub const LOG_POWER_FLOOR: f64 = 1e-12;

/// One-sided power `|X_k|^2 / N` for `k = 0..=N/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs_hz: Vec<f64>,
    pub power: Vec<f64>,
}

/// Reusable periodogram for a fixed signal length.
pub struct Periodogram {
    fft: Arc<dyn Fft<f64>>,
    len: usize,
    sample_rate_hz: f64,
}

impl Periodogram {
    pub fn new(len: usize, sample_rate_hz: f64) -> Result<Self, DspError> {
        if len < 2 {
            return Err(DspError::TooFewSamples { needed: 2, got: len });
        }
        Ok(Self {
            fft: FftPlanner::new().plan_fft_forward(len),
            len,
            sample_rate_hz,
        })
    }

    pub fn estimate(&self, signal: &[f64]) -> Spectrum {
        assert_eq!(signal.len(), self.len, "periodogram length mismatch");
        let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft.process(&mut buf);
        let bins = self.len / 2 + 1;
        let n = self.len as f64;
        Spectrum {
            freqs_hz: (0..bins).map(|k| k as f64 * self.sample_rate_hz / n).collect(),
            power: buf[..bins].iter().map(|z| z.norm_sqr() / n).collect(),
        }
    }
}

pub fn periodogram(signal: &[f64], sample_rate_hz: f64) -> Result<Spectrum, DspError> {
    Ok(Periodogram::new(signal.len(), sample_rate_hz)?.estimate(signal))
}

/// `ln(mean power over bins with centre in [low, high) + floor)` per band.
pub fn band_log_power(spectrum: &Spectrum, bands: &BandSet) -> Result<[f64; BAND_COUNT], DspError> {
    let mut out = [0.0; BAND_COUNT];
    for (slot, band) in out.iter_mut().zip(bands.bands()) {
        let (sum, count) = spectrum
            .freqs_hz
            .iter()
            .zip(&spectrum.power)
            .filter(|(f, _)| **f >= band.low_hz && **f < band.high_hz)
            .fold((0.0, 0usize), |(s, c), (_, p)| (s + p, c + 1));
        if count == 0 {
            return Err(DspError::EmptyBand {
                low_hz: band.low_hz,
                high_hz: band.high_hz,
            });
        }
        *slot = (sum / count as f64 + LOG_POWER_FLOOR).ln();
    }
    Ok(out)
}
