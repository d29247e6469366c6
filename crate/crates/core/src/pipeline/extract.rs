use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::dsp::{analytic_signal, design_bandpass, filter_signal, instantaneous_phase, BandSet, DEFAULT_TAPS};
use crate::features::{
    build_family_pattern, check_family_order, default_entropy_bins, stack_patterns, FamilySource, FeatureFamily,
    PatternSet,
};
use crate::ingest::{segment_epochs, AnnotationSet, RateMode, Recording};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    /// Seven `[low, high)` pairs in Hz.
    pub bands: Vec<(f64, f64)>,
    /// Canonical order: plv, energy, entropy.
    pub families: Vec<FeatureFamily>,
    pub filter_taps: usize,
    /// Histogram bins for the entropy measure; `None` picks the default for
    /// the epoch length.
    pub entropy_bins: Option<usize>,
    /// Recordings whose signals differ in rate are rejected unless this is
    /// set; then every signal is linearly interpolated onto it.
    pub resample_hz: Option<f64>,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            bands: BandSet::default().bands().iter().map(|b| (b.low_hz, b.high_hz)).collect(),
            families: FeatureFamily::ALL.to_vec(),
            filter_taps: DEFAULT_TAPS,
            entropy_bins: None,
            resample_hz: None,
        }
    }
}

impl ExtractConfig {
    pub fn band_set(&self) -> Result<BandSet, PipelineError> {
        Ok(BandSet::new(&self.bands)?)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.band_set()?;
        check_family_order(&self.families)?;
        if self.families.is_empty() {
            return Err(PipelineError::Invalid("no feature families requested".into()));
        }
        if self.filter_taps.is_multiple_of(2) {
            return Err(PipelineError::Invalid(format!("filter_taps {} must be odd", self.filter_taps)));
        }
        if matches!(self.entropy_bins, Some(k) if k < 2) {
            return Err(PipelineError::Invalid("entropy_bins must be >= 2".into()));
        }
        if matches!(self.resample_hz, Some(f) if !(f > 0.0 && f.is_finite())) {
            return Err(PipelineError::Invalid("resample_hz must be positive".into()));
        }
        Ok(())
    }

    pub fn rate_mode(&self) -> RateMode {
        self.resample_hz.map_or(RateMode::Reject, RateMode::Resample)
    }
}

/// One pattern per whole second of `recording`, labelled from
/// `annotations`. Band filtering and the Hilbert transform run over the
/// full recording, so epochs do not see filter edge effects except at the
/// recording's ends.
pub fn extract_patterns(
    recording: &Recording,
    annotations: &AnnotationSet,
    config: &ExtractConfig,
) -> Result<PatternSet, PipelineError> {
    config.validate()?;
    let bands = config.band_set()?;
    let fs = recording.sample_rate_hz();
    let epochs = segment_epochs(recording, annotations);
    let mut set = PatternSet::new(recording.channel_count(), config.families.clone())?;
    if epochs.is_empty() {
        return Ok(set);
    }
    let per_epoch = epochs.epochs[0].window[0].len();
    let bins = config.entropy_bins.unwrap_or_else(|| default_entropy_bins(per_epoch));

    let needs_phase = config
        .families
        .iter()
        .any(|f| matches!(f, FeatureFamily::Plv | FeatureFamily::Entropy));
    // [band][channel] -> whole-recording phase
    let mut phases: Vec<Vec<Vec<f64>>> = Vec::new();
    if needs_phase {
        for band in bands.bands() {
            let kernel = design_bandpass(*band, fs, config.filter_taps)?;
            let mut per_channel = Vec::with_capacity(recording.channel_count());
            for channel in recording.samples() {
                let filtered = filter_signal(channel, &kernel)?;
                per_channel.push(instantaneous_phase(&analytic_signal(&filtered)).values);
            }
            phases.push(per_channel);
        }
    }

    let mut window_phases: Vec<Vec<Vec<f64>>> = Vec::new();
    for epoch in &epochs.epochs {
        let range = epoch.index * per_epoch..(epoch.index + 1) * per_epoch;
        if needs_phase {
            window_phases = phases
                .iter()
                .map(|band| band.iter().map(|ch| ch[range.clone()].to_vec()).collect())
                .collect();
        }
        let parts = config
            .families
            .iter()
            .map(|&family| {
                let source = match family {
                    FeatureFamily::Energy => FamilySource::Samples {
                        window: &epoch.window,
                        sample_rate_hz: fs,
                    },
                    _ => FamilySource::Phases(&window_phases),
                };
                build_family_pattern(source, family, &bands, bins)
            })
            .collect::<Result<Vec<_>, _>>()?;
        set.push(epoch.meta(), &stack_patterns(&parts)?)?;
    }
    Ok(set)
}
