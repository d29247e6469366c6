use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{phase_entropy_rho, plv, relative_phases, FeatureError};
use crate::dsp::{band_log_power, BandSet, Periodogram, BAND_COUNT};

/// Feature families in canonical stacking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureFamily {
    Plv = 0,
    Energy = 1,
    Entropy = 2,
}

impl FeatureFamily {
    pub const ALL: [FeatureFamily; 3] = [FeatureFamily::Plv, FeatureFamily::Energy, FeatureFamily::Entropy];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureFamily::Plv => "plv",
            FeatureFamily::Energy => "energy",
            FeatureFamily::Entropy => "entropy",
        }
    }
}

impl fmt::Display for FeatureFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureFamily {
    type Err = FeatureError;
    fn from_str(s: &str) -> Result<Self, FeatureError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plv" => Ok(FeatureFamily::Plv),
            "energy" | "power" => Ok(FeatureFamily::Energy),
            "entropy" | "rho" => Ok(FeatureFamily::Entropy),
            _ => Err(FeatureError::UnknownFamily(s.to_string())),
        }
    }
}

/// Checks that families are non-empty, unique and in canonical order.
pub fn check_family_order(families: &[FeatureFamily]) -> Result<(), FeatureError> {
    if families.is_empty() || families.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FeatureError::FamilyOrder(families.to_vec()));
    }
    Ok(())
}

/// A pattern image: seven `n x n` band blocks stacked vertically per
/// family, families side by side. Row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternMatrix {
    n_channels: usize,
    families: Vec<FeatureFamily>,
    data: Vec<f64>,
}

impl PatternMatrix {
    pub fn from_parts(n_channels: usize, families: Vec<FeatureFamily>, data: Vec<f64>) -> Result<Self, FeatureError> {
        check_family_order(&families)?;
        let expected = BAND_COUNT * n_channels * n_channels * families.len();
        if data.len() != expected {
            return Err(FeatureError::ShapeMismatch(format!(
                "{} values for a {}x{} pattern",
                data.len(),
                BAND_COUNT * n_channels,
                n_channels * families.len()
            )));
        }
        Ok(Self { n_channels, families, data })
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn families(&self) -> &[FeatureFamily] {
        &self.families
    }

    pub fn rows(&self) -> usize {
        BAND_COUNT * self.n_channels
    }

    pub fn cols(&self) -> usize {
        self.n_channels * self.families.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols() + col]
    }

    /// Entry for channel pair `(i, j)` of one band and family.
    pub fn entry(&self, family: FeatureFamily, band: usize, i: usize, j: usize) -> Option<f64> {
        let f = self.families.iter().position(|&x| x == family)?;
        Some(self.get(band * self.n_channels + i, f * self.n_channels + j))
    }

    /// Copy of one `n x n` band block.
    pub fn block(&self, family: FeatureFamily, band: usize) -> Option<Vec<Vec<f64>>> {
        self.families.iter().position(|&x| x == family)?;
        let n = self.n_channels;
        Some(
            (0..n)
                .map(|i| (0..n).map(|j| self.entry(family, band, i, j).unwrap()).collect())
                .collect(),
        )
    }
}

/// Per-epoch input to a family.
#[derive(Debug, Clone, Copy)]
pub enum FamilySource<'a> {
    /// `[band][channel]` instantaneous phase slices.
    Phases(&'a [Vec<Vec<f64>>]),
    /// `[channel]` raw samples.
    Samples {
        window: &'a [Vec<f64>],
        sample_rate_hz: f64,
    },
}

fn single(n: usize, family: FeatureFamily, values: impl Fn(usize, usize, usize) -> Result<f64, FeatureError>) -> Result<PatternMatrix, FeatureError> {
    let mut data = vec![0.0; BAND_COUNT * n * n];
    for band in 0..BAND_COUNT {
        for i in 0..n {
            for j in i..n {
                let v = values(band, i, j)?;
                data[(band * n + i) * n + j] = v;
                data[(band * n + j) * n + i] = v;
            }
        }
    }
    PatternMatrix::from_parts(n, vec![family], data)
}

fn synchrony_pattern(
    phases: &[Vec<Vec<f64>>],
    family: FeatureFamily,
    num_bins: usize,
) -> Result<PatternMatrix, FeatureError> {
    if phases.len() != BAND_COUNT {
        return Err(FeatureError::ShapeMismatch(format!(
            "{} phase bands, expected {BAND_COUNT}",
            phases.len()
        )));
    }
    let n = phases[0].len();
    if n < 2 {
        return Err(FeatureError::TooFewChannels(n));
    }
    if phases.iter().any(|b| b.len() != n) {
        return Err(FeatureError::ShapeMismatch("bands disagree on channel count".into()));
    }
    single(n, family, |band, i, j| {
        if i == j {
            // self-pair: perfect synchrony
            return Ok(1.0);
        }
        let rel = relative_phases(&phases[band][i], &phases[band][j])?;
        match family {
            FeatureFamily::Plv => plv(&rel),
            _ => phase_entropy_rho(&rel, num_bins),
        }
    })
}

fn energy_pattern(window: &[Vec<f64>], sample_rate_hz: f64, bands: &BandSet) -> Result<PatternMatrix, FeatureError> {
    let n = window.len();
    if n < 2 {
        return Err(FeatureError::TooFewChannels(n));
    }
    let len = window[0].len();
    if window.iter().any(|c| c.len() != len) {
        return Err(FeatureError::ShapeMismatch("channels differ in length".into()));
    }
    let estimator = Periodogram::new(len, sample_rate_hz)?;
    // band log-power per unordered pair; the diagonal uses the channel itself
    let mut powers = vec![[0.0; BAND_COUNT]; n * n];
    let mut diff = vec![0.0; len];
    for i in 0..n {
        for j in i..n {
            let p = if i == j {
                band_log_power(&estimator.estimate(&window[i]), bands)?
            } else {
                for (d, (a, b)) in diff.iter_mut().zip(window[i].iter().zip(&window[j])) {
                    *d = a - b;
                }
                band_log_power(&estimator.estimate(&diff), bands)?
            };
            powers[i * n + j] = p;
        }
    }
    single(n, FeatureFamily::Energy, |band, i, j| Ok(powers[i * n + j][band]))
}

/// One family's `(7n) x n` pattern for an epoch.
pub fn build_family_pattern(
    source: FamilySource<'_>,
    family: FeatureFamily,
    bands: &BandSet,
    num_bins: usize,
) -> Result<PatternMatrix, FeatureError> {
    match (family, source) {
        (FeatureFamily::Plv | FeatureFamily::Entropy, FamilySource::Phases(phases)) => {
            synchrony_pattern(phases, family, num_bins)
        }
        (FeatureFamily::Energy, FamilySource::Samples { window, sample_rate_hz }) => {
            energy_pattern(window, sample_rate_hz, bands)
        }
        (family, _) => Err(FeatureError::WrongSource(family)),
    }
}

/// Side-by-side concatenation of single- or multi-family patterns.
pub fn stack_patterns(patterns: &[PatternMatrix]) -> Result<PatternMatrix, FeatureError> {
    let first = patterns.first().ok_or(FeatureError::ShapeMismatch("nothing to stack".into()))?;
    let n = first.n_channels;
    if let Some(p) = patterns.iter().find(|p| p.n_channels != n) {
        return Err(FeatureError::ShapeMismatch(format!(
            "pattern shapes {:?} and {:?} differ in height",
            first.shape(),
            p.shape()
        )));
    }
    let families: Vec<FeatureFamily> = patterns.iter().flat_map(|p| p.families.iter().copied()).collect();
    check_family_order(&families)?;
    let rows = BAND_COUNT * n;
    let cols: usize = patterns.iter().map(|p| p.cols()).sum();
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for p in patterns {
            data.extend_from_slice(&p.data[r * p.cols()..(r + 1) * p.cols()]);
        }
    }
    PatternMatrix::from_parts(n, families, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phases(n: usize, len: usize) -> Vec<Vec<Vec<f64>>> {
        (0..BAND_COUNT)
            .map(|b| {
                (0..n)
                    .map(|c| {
                        (0..len)
                            .map(|t| super::super::wrap_phase(0.1 * (t * (c + 1)) as f64 + 0.37 * (b * c) as f64 + 0.01 * (t * t % 17) as f64))
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    fn samples(n: usize, len: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|c| (0..len).map(|t| (((t * 31 + c * 17) % 23) as f64 - 11.0) * (c + 1) as f64).collect())
            .collect()
    }

    #[test]
    fn ten_channel_dimensioning() {
        let ph = phases(10, 250);
        let bands = BandSet::default();
        let p = build_family_pattern(FamilySource::Phases(&ph), FeatureFamily::Plv, &bands, 16).unwrap();
        assert_eq!(p.shape(), (70, 10));
        let mut total = 0;
        for band in 0..BAND_COUNT {
            let block = p.block(FeatureFamily::Plv, band).unwrap();
            let mut pairs = 0;
            for i in 0..10 {
                assert_eq!(block[i][i], 1.0);
                for j in 0..10 {
                    assert_eq!(block[i][j], block[j][i]);
                    if i < j {
                        pairs += 1;
                    }
                }
            }
            assert_eq!(pairs, 45);
            total += pairs;
        }
        assert_eq!(total, 315);
        let e = build_family_pattern(FamilySource::Phases(&ph), FeatureFamily::Entropy, &bands, 16).unwrap();
        let both = stack_patterns(&[p, e]).unwrap();
        assert_eq!(both.shape(), (70, 20));
    }

    #[test]
    fn stacking_rules() {
        let n = 4;
        let ph = phases(n, 250);
        let raw = samples(n, 250);
        let bands = BandSet::default();
        let plv = build_family_pattern(FamilySource::Phases(&ph), FeatureFamily::Plv, &bands, 16).unwrap();
        let ent = build_family_pattern(FamilySource::Phases(&ph), FeatureFamily::Entropy, &bands, 16).unwrap();
        let en = build_family_pattern(
            FamilySource::Samples { window: &raw, sample_rate_hz: 250.0 },
            FeatureFamily::Energy,
            &bands,
            16,
        )
        .unwrap();
        let all = stack_patterns(&[plv.clone(), en.clone(), ent.clone()]).unwrap();
        assert_eq!(all.shape(), (28, 12));
        assert_eq!(all.families(), &FeatureFamily::ALL);
        assert_eq!(all.get(5, 4 + 1), en.get(5, 1));
        assert_eq!(all.get(27, 11), ent.get(27, 3));
        assert_eq!(stack_patterns(std::slice::from_ref(&plv)).unwrap(), plv);
        assert!(matches!(stack_patterns(&[ent.clone(), plv.clone()]), Err(FeatureError::FamilyOrder(_))));
        assert!(matches!(stack_patterns(&[plv.clone(), plv.clone()]), Err(FeatureError::FamilyOrder(_))));
        let other = build_family_pattern(FamilySource::Phases(&phases(3, 250)), FeatureFamily::Entropy, &bands, 16).unwrap();
        assert!(matches!(stack_patterns(&[plv, other]), Err(FeatureError::ShapeMismatch(_))));
    }

    #[test]
    fn energy_blocks() {
        let n = 3;
        let raw = samples(n, 250);
        let bands = BandSet::default();
        let src = FamilySource::Samples { window: &raw, sample_rate_hz: 250.0 };
        let p = build_family_pattern(src, FeatureFamily::Energy, &bands, 16).unwrap();
        let doubled: Vec<Vec<f64>> = raw.iter().map(|c| c.iter().map(|v| 2.0 * v).collect()).collect();
        let q = build_family_pattern(
            FamilySource::Samples { window: &doubled, sample_rate_hz: 250.0 },
            FeatureFamily::Energy,
            &bands,
            16,
        )
        .unwrap();
        for (a, b) in p.data().iter().zip(q.data()) {
            assert!((b - a - 4f64.ln()).abs() < 1e-9);
        }
        // diagonal is the channel's own band power
        let own = band_log_power(&crate::dsp::periodogram(&raw[1], 250.0).unwrap(), &bands).unwrap();
        for (band, v) in own.iter().enumerate() {
            assert_eq!(p.entry(FeatureFamily::Energy, band, 1, 1).unwrap(), *v);
        }
    }

    #[test]
    fn input_errors() {
        let bands = BandSet::default();
        let ph = phases(1, 10);
        assert_eq!(
            build_family_pattern(FamilySource::Phases(&ph), FeatureFamily::Plv, &bands, 16),
            Err(FeatureError::TooFewChannels(1))
        );
        let ph = phases(3, 10);
        assert_eq!(
            build_family_pattern(FamilySource::Phases(&ph), FeatureFamily::Energy, &bands, 16),
            Err(FeatureError::WrongSource(FeatureFamily::Energy))
        );
    }

    #[test]
    fn family_parsing() {
        assert_eq!("PLV".parse::<FeatureFamily>().unwrap(), FeatureFamily::Plv);
        assert_eq!("energy".parse::<FeatureFamily>().unwrap(), FeatureFamily::Energy);
        assert!("coherence".parse::<FeatureFamily>().is_err());
    }
}
