use serde::{Deserialize, Serialize};

use super::DspError;

pub const BAND_COUNT: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl Band {
    pub const fn new(low_hz: f64, high_hz: f64) -> Self {
        Self { low_hz, high_hz }
    }

    pub fn centre_hz(&self) -> f64 {
        0.5 * (self.low_hz + self.high_hz)
    }
}

const NAMES: [&str; BAND_COUNT] = [
    "delta",
    "theta",
    "alpha",
    "low beta",
    "high beta",
    "low gamma",
    "high gamma",
];

/// The seven clinical bands, in increasing frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSet {
    bands: [Band; BAND_COUNT],
}

impl Default for BandSet {
    fn default() -> Self {
        Self {
            bands: [
                Band::new(0.5, 4.0),
                Band::new(4.0, 7.0),
                Band::new(7.0, 13.0),
                Band::new(13.0, 15.0),
                Band::new(15.0, 30.0),
                Band::new(30.0, 45.0),
                Band::new(45.0, 70.0),
            ],
        }
    }
}

impl BandSet {
    pub fn new(bands: &[(f64, f64)]) -> Result<Self, DspError> {
        if bands.len() != BAND_COUNT {
            return Err(DspError::InvalidBands(format!(
                "expected {BAND_COUNT} bands, got {}",
                bands.len()
            )));
        }
        let mut out = [Band::new(0.0, 0.0); BAND_COUNT];
        for (i, &(lo, hi)) in bands.iter().enumerate() {
            if !(lo >= 0.0 && lo < hi) {
                return Err(DspError::InvalidBands(format!("band {i}: {lo}-{hi} Hz")));
            }
            if i > 0 && lo < bands[i - 1].1 {
                return Err(DspError::InvalidBands(format!(
                    "band {i} overlaps band {}",
                    i - 1
                )));
            }
            out[i] = Band::new(lo, hi);
        }
        Ok(Self { bands: out })
    }

    pub fn bands(&self) -> &[Band; BAND_COUNT] {
        &self.bands
    }

    pub fn name(index: usize) -> &'static str {
        NAMES[index]
    }

    pub fn highest_hz(&self) -> f64 {
        self.bands[BAND_COUNT - 1].high_hz
    }
}
