use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{Band, DspError};

/// 501 taps at 250 Hz: roughly 1.7 Hz Hamming transition width.
pub const DEFAULT_TAPS: usize = 501;

/// Linear-phase band-pass FIR.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterKernel {
    pub band: Band,
    pub sample_rate_hz: f64,
    pub coefficients: Vec<f64>,
    pub group_delay: usize,
}

impl FilterKernel {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Magnitude response at `freq_hz`.
    pub fn gain_at(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate_hz;
        let centre = self.group_delay as f64;
        // symmetric taps: the response is real after removing the delay
        self.coefficients
            .iter()
            .enumerate()
            .map(|(n, h)| h * (w * (n as f64 - centre)).cos())
            .sum::<f64>()
            .abs()
    }
}

fn hamming(n: usize, len: usize) -> f64 {
    0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos()
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Hamming-windowed low-pass scaled to unit DC gain.
fn lowpass(cutoff_hz: f64, fs: f64, taps: usize) -> Vec<f64> {
    let m = (taps / 2) as f64;
    let fc = 2.0 * cutoff_hz / fs;
    let mut h: Vec<f64> = (0..taps)
        .map(|n| fc * sinc(fc * (n as f64 - m)) * hamming(n, taps))
        .collect();
    let dc: f64 = h.iter().sum();
    h.iter_mut().for_each(|x| *x /= dc);
    h
}

/// Windowed-sinc band-pass: difference of two unit-DC low-passes (so DC
/// gain is zero), rescaled to unit gain at the band centre.
pub fn design_bandpass(band: Band, sample_rate_hz: f64, num_taps: usize) -> Result<FilterKernel, DspError> {
    let nyquist = sample_rate_hz / 2.0;
    if band.high_hz >= nyquist {
        return Err(DspError::AboveNyquist {
            high_hz: band.high_hz,
            nyquist,
        });
    }
    if num_taps.is_multiple_of(2) || num_taps < 3 {
        return Err(DspError::EvenTaps(num_taps));
    }
    let high = lowpass(band.high_hz, sample_rate_hz, num_taps);
    let coefficients: Vec<f64> = if band.low_hz > 0.0 {
        let low = lowpass(band.low_hz, sample_rate_hz, num_taps);
        high.iter().zip(&low).map(|(h, l)| h - l).collect()
    } else {
        high
    };
    let mut kernel = FilterKernel {
        band,
        sample_rate_hz,
        coefficients,
        group_delay: num_taps / 2,
    };
    let g = kernel.gain_at(band.centre_hz());
    kernel.coefficients.iter_mut().for_each(|c| *c /= g);
    // enforce exact symmetry
    let n = kernel.coefficients.len();
    for i in 0..n / 2 {
        let avg = 0.5 * (kernel.coefficients[i] + kernel.coefficients[n - 1 - i]);
        kernel.coefficients[i] = avg;
        kernel.coefficients[n - 1 - i] = avg;
    }
    Ok(kernel)
}

/// Zero-phase filtering: mirror-pads by the group delay at both ends,
/// convolves (via FFT) and drops the delay, so the output has the input's
/// length and no phase shift.
pub fn filter_signal(signal: &[f64], kernel: &FilterKernel) -> Result<Vec<f64>, DspError> {
    let taps = kernel.len();
    if signal.len() <= taps {
        return Err(DspError::SignalTooShort {
            signal: signal.len(),
            kernel: taps,
        });
    }
    let half = kernel.group_delay;
    let len = signal.len();
    let padded_len = len + 2 * half;
    let fft_len = (padded_len + taps - 1).next_power_of_two();

    let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
    for (m, slot) in buf.iter_mut().take(padded_len).enumerate() {
        let x = if m < half {
            signal[half - m]
        } else if m < half + len {
            signal[m - half]
        } else {
            signal[2 * (len - 1) - (m - half)]
        };
        *slot = Complex64::new(x, 0.0);
    }
    let mut h = vec![Complex64::new(0.0, 0.0); fft_len];
    for (slot, &c) in h.iter_mut().zip(&kernel.coefficients) {
        *slot = Complex64::new(c, 0.0);
    }

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(fft_len);
    let inv = planner.plan_fft_inverse(fft_len);
    fwd.process(&mut buf);
    fwd.process(&mut h);
    for (a, b) in buf.iter_mut().zip(&h) {
        *a *= b;
    }
    inv.process(&mut buf);
    let scale = 1.0 / fft_len as f64;
    Ok((0..len).map(|n| buf[n + 2 * half].re * scale).collect())
}
